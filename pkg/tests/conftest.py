import pytest

import src.utils.logger


@pytest.fixture(autouse=True)
def isolated_log(tmp_path, monkeypatch):
    """Keeps experiment log entries out of the working directory."""
    log_file = tmp_path / "logs" / "experiment_data.json"
    monkeypatch.setattr(src.utils.logger, "LOG_FILE", str(log_file))
    return log_file


@pytest.fixture(scope="session")
def lattice_spectrum():
    """Bragg atoms of the unit lattice in [−2.5, 2.5] from boxes up to length 4096."""
    from src.autocorrelation import VanHoveSequence
    from src.diffraction import peak_scan
    from src.generators import lattice

    return peak_scan(lattice(1.0), VanHoveSequence.geometric(512.0, 2.0, 3), (-2.5, 2.5))


@pytest.fixture(scope="session")
def fibonacci_spectrum():
    """Bragg atoms of the Fibonacci chain in [−3, 3] from boxes up to length 25600."""
    from src.autocorrelation import VanHoveSequence
    from src.diffraction import peak_scan
    from src.generators import example

    return peak_scan(example("fibonacci"), VanHoveSequence.geometric(100.0, 2.0, 8), (-3.0, 3.0))


@pytest.fixture(scope="session")
def period_doubling_spectrum():
    """Bragg atoms of the period-doubling comb in one period [−0.5, 0.5]."""
    from src.autocorrelation import VanHoveSequence
    from src.diffraction import peak_scan
    from src.generators import example

    return peak_scan(example("period-doubling"), VanHoveSequence.geometric(1024.0, 2.0, 3), (-0.5, 0.5))
