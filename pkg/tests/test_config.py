import pytest
from hypothesis import given
from hypothesis import strategies as st

from cohortflow.alert import AlertConfig
from cohortflow.cohort import CohortConfig
from cohortflow.config import DEFAULTS, ConfigError, dump_config, load_config, parse_config, section
from cohortflow.core import CalibrationConfig
from cohortflow.detect import DetectorConfig
from cohortflow.linker import LinkerConfig


def test_defaults_cover_sections():
    assert DEFAULTS["detector.ratio"] == 1.1
    assert DEFAULTS["linker.tol_changed"] == 0.05
    assert DEFAULTS["alert.angle_tol_deg"] == 20.0
    assert section(DEFAULTS, "calibration") == CalibrationConfig()
    assert section(DEFAULTS, "detector") == DetectorConfig()
    assert section(DEFAULTS, "linker") == LinkerConfig()
    assert section(DEFAULTS, "cohort") == CohortConfig()
    assert section(DEFAULTS, "alert") == AlertConfig()


def test_parse_types_and_comments():
    cfg = parse_config("""
    # comment
    linker.max_iter = 7   # trailing
    cohort.weighted_fit = off
    calibration.fps = 25
    run.input = data/d.csv
    """)
    assert cfg == {"linker.max_iter": 7, "cohort.weighted_fit": False, "calibration.fps": 25.0,
                   "run.input": "data/d.csv"}


@pytest.mark.parametrize("text, msg", [
    ("linker.bogus = 1", "unknown key"),
    ("linker.max_iter = 1\nlinker.max_iter = 2", "duplicate"),
    ("linker.max_iter = 1.5", "integer"),
    ("calibration.fps = inf", "finite"),
    ("cohort.weighted_fit = maybe", "boolean"),
    ("just words", "expected"),
])
def test_parse_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(text)


def test_invalid_section_value():
    cfg = load_config(overrides={"detector.ratio": 0.9})
    with pytest.raises(ConfigError, match="detector"):
        section(cfg, "detector")


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/x.cfg")


values = st.fixed_dictionaries({
    "linker.max_iter": st.integers(0, 50),
    "calibration.fps": st.floats(0.1, 1e4, allow_nan=False),
    "cohort.beta": st.floats(0, 10),
    "cohort.weighted_fit": st.booleans(),
    "run.seed": st.integers(0, 2**31),
})


@given(values)
def test_dump_parse_roundtrip(overrides):
    cfg = load_config(overrides=overrides)
    assert {**DEFAULTS, **parse_config(dump_config(cfg))} == cfg
