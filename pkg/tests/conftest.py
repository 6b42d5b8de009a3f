import hypothesis
import pytest

import levy_lab as ll

hypothesis.settings.register_profile(
    "fast", max_examples=25, deadline=None, derandomize=True
)
hypothesis.settings.load_profile("fast")


@pytest.fixture(scope="session")
def gamma_model():
    return ll.LevyModel.gamma_process(30.0, 1.0)


@pytest.fixture(scope="session")
def nig_model():
    return ll.LevyModel.nig(1.5, 0.1, 0.5)


@pytest.fixture(scope="session")
def clip_min():
    return ll.ClipFunction.min_one_inv_x2()


@pytest.fixture(scope="session")
def gamma_sample(gamma_model):
    return ll.sample_increments(gamma_model, 2000, 0.01, seed=3)
