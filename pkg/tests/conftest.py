import math

import pytest

from quantshape import fir_design, quantsim


@pytest.fixture(scope="session")
def bench():
    return quantsim.pendulum_bench()


@pytest.fixture(scope="session")
def pendulum_plant(bench):
    return quantsim.closed_loop_H(bench)


@pytest.fixture(scope="session")
def pendulum_spec(pendulum_plant):
    return fir_design.DesignSpec(pendulum_plant, 4, 0.05, math.pi / 2)


@pytest.fixture(scope="session")
def fir_report(pendulum_spec):
    # one LP solve shared by the design, simulation and acceptance tests
    return fir_design.design_min_bits(pendulum_spec)


@pytest.fixture(scope="session")
def designed_trace(bench, fir_report):
    qspec = quantsim.QuantizerSpec.from_bits_interval(fir_report.min_bits,
                                                      fir_report.interval)
    quant = quantsim.FeedbackQuantizer.from_fir(qspec, fir_report.filter)
    return quantsim.run_benchmark(bench, quant, 20.0), qspec
