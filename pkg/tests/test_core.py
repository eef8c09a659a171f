import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cvqkd.core import (
    CalibrationError,
    LinkParams,
    RngStream,
    SampledTrace,
    SymbolFrame,
    TraceKind,
    apply_frequency_response,
    calibrate_snu,
    frame_stream,
    gaussian_draw,
    trusted_noise_from_traces,
)


class TestCalibration:
    def test_examples(self):
        assert calibrate_snu(1.5, 0.5) == 1.0
        assert calibrate_snu(2.0, 0.0) == 2.0
        with pytest.raises(CalibrationError):
            calibrate_snu(0.5, 0.5)

    def test_trusted_noise_examples(self):
        assert trusted_noise_from_traces(1.5, 0.5) == pytest.approx(0.5)
        assert trusted_noise_from_traces(1.058, 0.058) == pytest.approx(0.058)
        assert trusted_noise_from_traces(2.0, 0.0) == 0.0

    @given(
        st.floats(1e-6, 1e6),
        st.floats(0.0, 1e6),
    )
    def test_identity(self, vac_excess, var_el):
        var_vac = var_el + vac_excess
        t = trusted_noise_from_traces(var_vac, var_el)
        assert t * calibrate_snu(var_vac, var_el) == pytest.approx(var_el, rel=1e-9, abs=1e-12)

    def test_vacuum_normalizes_to_unity(self):
        n = 200_000
        g = RngStream(3, 0)
        scale = 7.3
        vac = g.normal(np.sqrt(scale * 1.2), n)
        el = g.normal(np.sqrt(scale * 0.2), n)
        snu = calibrate_snu(np.var(vac), np.var(el))
        shot = RngStream(3, 1).normal(np.sqrt(scale), n)
        assert np.var(shot / np.sqrt(snu)) == pytest.approx(1.0, abs=5 * np.sqrt(2 / n) + 5 * np.sqrt(2 / n))


class TestRng:
    def test_gaussian_draw(self):
        r = RngStream(1, 0)
        assert gaussian_draw(r, 0, 1.0).size == 0
        x = gaussian_draw(RngStream(1, 0), 1_000_000, 1.8)
        assert abs(np.var(x) - 1.8) < 3 * 1.8 * np.sqrt(2 / 1e6)
        with pytest.raises(ValueError):
            gaussian_draw(r, 10, -1.0)

    def test_reproducible(self):
        a = gaussian_draw(RngStream(42, 7), 1000, 1.0)
        b = gaussian_draw(RngStream(42, 7), 1000, 1.0)
        assert np.array_equal(a, b)

    def test_streams_independent(self):
        a = RngStream(42, 0).normal(1.0, 100_000)
        b = RngStream(42, 1).normal(1.0, 100_000)
        assert abs(np.corrcoef(a, b)[0, 1]) < 4 / np.sqrt(1e5)

    def test_frame_streams_distinct(self):
        ids = {frame_stream(0, f, p).stream_id for f in range(3) for p in ("symbols", "phase", "shot")}
        assert len(ids) == 9

    def test_complex_normal(self):
        z = RngStream(5, 0).complex_normal(2.0, 200_000)
        assert np.var(z.real) == pytest.approx(2.0, rel=0.02)
        assert np.var(z.imag) == pytest.approx(2.0, rel=0.02)


class TestContainers:
    def test_trace_validation(self):
        with pytest.raises(ValueError):
            SampledTrace(0.0, np.zeros(4))
        with pytest.raises(ValueError):
            SampledTrace(1.0, np.zeros((2, 2)))
        tr = SampledTrace(1e9, np.arange(4.0), kind=1)
        assert tr.kind is TraceKind.VACUUM
        assert not tr.samples.flags.writeable
        assert len(tr.replace(np.zeros(3))) == 3

    def test_symbol_frame_prefix(self):
        s = np.arange(10) + 1j
        f = SymbolFrame.from_symbols(s, 3, 20e6, 5)
        assert f.n_symbols == 10
        assert np.array_equal(f.all_symbols, s)
        assert np.array_equal(f.reference_symbols, s[:3])

    def test_link_params_ranges(self):
        with pytest.raises(ValueError):
            LinkParams(eta=0.0)
        with pytest.raises(ValueError):
            LinkParams(u=-1e-3)
        with pytest.raises(ValueError):
            LinkParams(fer=1.5)
        lp = LinkParams()
        assert lp.measured_variance() == pytest.approx(0.68 * 0.049 / 2 * 1.8 + 1.058 + 0.00065)


def test_frequency_response_identity_and_linearity():
    g = RngStream(0, 0)
    x, y = g.normal(1.0, 1001), g.normal(1.0, 1001)
    one = apply_frequency_response(x, 1.0, lambda f: np.ones_like(f))
    assert np.allclose(one, x, atol=1e-12)
    resp = lambda f: 1 / (1 + f)  # noqa: E731
    lhs = apply_frequency_response(2 * x + 3 * y, 1.0, resp)
    rhs = 2 * apply_frequency_response(x, 1.0, resp) + 3 * apply_frequency_response(y, 1.0, resp)
    assert np.sqrt(np.mean((lhs - rhs) ** 2)) < 1e-12
