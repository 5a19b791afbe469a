"""Tests for proxima.settings: defaults and the strict YAML loader."""

import tempfile

import pytest

from proxima.settings import CertifySettings, IterationSettings, default_settings, load_settings


def _yaml(text: str) -> str:
    with tempfile.NamedTemporaryFile(mode="w", suffix=".yaml", delete=False) as f:
        f.write(text)
        f.flush()
    return f.name


class TestDefaults:
    def test_iteration_defaults(self):
        s = IterationSettings()
        assert s.tol == 1e-6
        assert s.max_iter == 10_000

    def test_certify_defaults(self):
        s = CertifySettings()
        assert s.random_pairs == 10_000
        assert s.seed == 0
        assert s.workers == 1
        assert not s.literal_derived

    def test_default_settings(self):
        assert default_settings().iteration.tol == 1e-6


class TestLoadSettings:
    def test_custom_values(self):
        s = load_settings(_yaml("iteration:\n  tol: 1.0e-8\n  max_iter: 50\ncertify:\n  seed: 7\n"))
        assert s.iteration.tol == 1e-8
        assert s.iteration.max_iter == 50
        assert s.certify.seed == 7

    def test_default_when_not_specified(self):
        s = load_settings(_yaml("certify:\n  random_pairs: 20\n"))
        assert s.certify.random_pairs == 20
        assert s.iteration.max_iter == 10_000

    def test_empty_file(self):
        assert load_settings(_yaml("")).certify.seed == 0

    def test_ints_cast_to_float(self):
        s = load_settings(_yaml("iteration:\n  tol: 0\n"))
        assert s.iteration.tol == 0.0
        assert isinstance(s.iteration.tol, float)

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="max_iters"):
            load_settings(_yaml("iteration:\n  max_iters: 5\n"))

    def test_unknown_section(self):
        with pytest.raises(ValueError, match="Unknown keys in 'settings'"):
            load_settings(_yaml("plots:\n  dpi: 100\n"))

    def test_bool_must_be_bool(self):
        with pytest.raises(ValueError, match="true or false"):
            load_settings(_yaml("certify:\n  cross_grid: 1\n"))

    def test_bad_type(self):
        with pytest.raises(ValueError, match="must be int"):
            load_settings(_yaml("certify:\n  seed: abc\n"))

    def test_not_a_mapping(self):
        with pytest.raises(ValueError, match="mapping"):
            load_settings(_yaml("- 1\n- 2\n"))
