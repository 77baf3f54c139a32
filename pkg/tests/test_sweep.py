"""Configuration parsing, sweep execution and result files."""

import hashlib
import json
from pathlib import Path

import pytest

from thzrf.errors import ConfigError
from thzrf.schemas import (
    HqamScheme, NcfskScheme, OutputKind, RqamScheme, SimConfig, SweepAxis, SweepSpec, bpsk, sqam,
)
from thzrf.services.linkstats import SnrModel
import thzrf.services.sweep as sweep_module
from thzrf.services.sweep import (
    CSV_COLUMNS, FLAG_ANALYTICAL, FLAG_GEOMETRY, curve_to_csv, emit, flag_summary, parse_config,
    parse_config_text, parse_scheme, read_csv, run_sweep, scheme_token, serialize,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = """
[thz]
alpha = 2.3
mu = 2.25
omega = 1.75
phi = 6.75
s0 = 0.56

[rf]
m = 2.3
omega_m = 1.5

[sweep]
schemes = 4-sqam
"""


class TestSchemeTokens:
    @pytest.mark.parametrize("token, expected", [
        ("bpsk", bpsk()),
        ("16-sqam", sqam(16)),
        ("4x2-rqam", RqamScheme(m_i=4, m_q=2)),
        ("8x4-rqam-b1.5", RqamScheme(m_i=8, m_q=4, beta=1.5)),
        ("32-hqam", HqamScheme(m=32)),
        ("4-NCFSK", NcfskScheme(m=4)),
    ])
    def test_parse(self, token, expected):
        assert parse_scheme(token) == expected

    @pytest.mark.parametrize("scheme", [
        bpsk(), sqam(64), RqamScheme(m_i=4, m_q=2), RqamScheme(m_i=8, m_q=4, beta=0.7),
        HqamScheme(m=8), NcfskScheme(m=2),
    ])
    def test_token_inverts_parse(self, scheme):
        assert parse_scheme(scheme_token(scheme)) == scheme

    def test_unknown(self):
        with pytest.raises(ValueError):
            parse_scheme("8-psk")


class TestParse:
    def test_empty_text_gives_defaults(self):
        model, spec = parse_config_text("")
        assert model == SnrModel()
        assert spec == SweepSpec()

    def test_minimal_strict(self):
        model, spec = parse_config_text(MINIMAL, use_defaults=False)
        assert model.thz_fading.alpha == 2.3
        assert spec.schemes == (sqam(4),)

    def test_comments_and_case(self):
        model, _ = parse_config_text("# link\n[THZ]\nPHI = 4.0  # narrower beam\n")
        assert model.pointing.phi == 4.0

    def test_out_of_range_value_names_key_and_line(self):
        text = "[thz]\nalpha = 2.0\nphi = -1\n"
        with pytest.raises(ConfigError) as info:
            parse_config_text(text, path="link.ini")
        message = str(info.value)
        assert info.value.line == 3
        assert "phi" in message
        assert "greater than 0" in message
        assert message.startswith("link.ini:3:")

    @pytest.mark.parametrize("text, line", [
        ("[thz]\nbeam = 3\n", 2),
        ("[antenna]\n", 1),
        ("[rf]\nm = 2\nm = 3\n", 3),
        ("[rf]\n[rf]\n", 2),
        ("m = 2\n", 1),
        ("[rf]\nm 2\n", 2),
        ("[rf\n", 1),
        ("[sweep]\nschemes = 4-sqam, 9-qam\n", 2),
    ])
    def test_structural_errors(self, text, line):
        with pytest.raises(ConfigError) as info:
            parse_config_text(text)
        assert info.value.line == line

    def test_missing_required_key_without_defaults(self):
        text = MINIMAL.replace("s0 = 0.56\n", "")
        with pytest.raises(ConfigError, match="s0"):
            parse_config_text(text, use_defaults=False)

    def test_mc_without_sim_section(self):
        with pytest.raises(ConfigError, match="sim"):
            parse_config_text("[sweep]\noutputs = analytical, mc\n")

    def test_trials_must_split_evenly(self):
        with pytest.raises(ConfigError, match="divisible"):
            parse_config_text("[sim]\ntrials = 100001\npartitions = 4\n")

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            parse_config(tmp_path / "missing.ini")

    @pytest.mark.parametrize("name", ["reference_link.ini", "relay_placement.ini", "rf_spread.ini"])
    def test_bundled_configs(self, name):
        model, spec = parse_config(CONFIG_DIR / name)
        assert spec.grid()

    def test_reference_config(self):
        model, spec = parse_config(CONFIG_DIR / "reference_link.ini")
        assert model == SnrModel()
        assert spec.sim == SimConfig(trials=1_000_000, seed=20240521, partitions=4)
        assert len(spec.grid()) == 15


class TestSerialize:
    def test_round_trip(self):
        model, spec = parse_config(CONFIG_DIR / "reference_link.ini")
        text = serialize(model, spec)
        again_model, again_spec = parse_config_text(text)
        assert again_model == model
        assert again_spec == spec
        assert serialize(again_model, again_spec) == text

    def test_round_trip_of_non_default_values(self):
        source = (
            "[thz]\nphi = 0.1\ns0 = 0.3333333333333333\n[power]\nn0 = 2.5\n"
            "[sweep]\naxis = omega_m\naxis_range = 0.5, 2, 0.5\n"
            "schemes = 8x4-rqam-b0.7, 4-ncfsk\noutputs = asymptotic, analytical\n"
        )
        model, spec = parse_config_text(source)
        assert parse_config_text(serialize(model, spec)) == (model, spec)

    def test_sim_section_omitted_without_mc(self):
        assert "[sim]" not in serialize(SnrModel(), SweepSpec())


def _spec(**kwargs) -> SweepSpec:
    base = dict(snr_db=(10.0, 30.0, 10.0), schemes=(sqam(4),))
    base.update(kwargs)
    return SweepSpec(**base)


class TestSweep:
    def test_analytical_curve_falls(self):
        curve = run_sweep(SnrModel(), _spec())
        values = [row.aser_analytical for row in curve.rows]
        assert len(values) == 3
        assert values[0] > values[1] > values[2] > 0
        assert not curve.flagged

    def test_rows_sorted(self):
        spec = _spec(schemes=(sqam(16), bpsk(), RqamScheme(m_i=4, m_q=2)))
        keys = [(row.snr_db, row.scheme) for row in run_sweep(SnrModel(), spec).rows]
        assert keys == sorted(keys)
        assert len(keys) == 9

    def test_extra_outputs_leave_analytical_unchanged(self):
        plain = run_sweep(SnrModel(), _spec())
        both = run_sweep(SnrModel(), _spec(outputs=frozenset({OutputKind.ANALYTICAL, OutputKind.ASYMPTOTIC})))
        assert [r.aser_analytical for r in plain.rows] == [r.aser_analytical for r in both.rows]
        assert all(r.aser_asymptotic is not None for r in both.rows)
        assert all(r.aser_asymptotic is None for r in plain.rows)

    def test_relay_closer_to_destination_is_worse(self):
        spec = _spec(axis=SweepAxis.D_SR, axis_range=(50.0, 1050.0, 1000.0),
                     schemes=(RqamScheme(m_i=4, m_q=2),))
        rows = run_sweep(SnrModel(), spec).rows
        assert [row.axis_value for row in rows] == [50.0, 1050.0]
        assert all(row.snr_db == spec.fixed_snr_db for row in rows)
        assert rows[1].aser_analytical > rows[0].aser_analytical

    @pytest.mark.slow
    def test_relay_placement_peaks_mid_span(self):
        """Low-diversity hops: ASER is worst with the relay between the ends."""
        model, spec = parse_config(CONFIG_DIR / "relay_placement.ini")
        spec = spec.model_copy(update={"axis_range": (50.0, 1050.0, 200.0)})
        curve = run_sweep(model, spec)
        assert not curve.flagged
        aser = [row.aser_analytical for row in curve.rows]
        assert [row.axis_value for row in curve.rows] == [50.0, 250.0, 450.0, 650.0, 850.0, 1050.0]
        assert max(aser[1:-1]) > max(aser[0], aser[-1])
        assert max(aser[1:-1]) > 1.03 * max(aser[0], aser[-1])

    def test_overflow_is_flagged_not_fatal(self, monkeypatch):
        real_aser = sweep_module.aser

        def overflowing(model, scheme):
            if scheme.label == "16-sqam":
                raise OverflowError("math range error")
            return real_aser(model, scheme)

        monkeypatch.setattr(sweep_module, "aser", overflowing)
        curve = run_sweep(SnrModel(), _spec(schemes=(sqam(4), sqam(16))))
        assert len(curve.rows) == 6
        for row in curve.rows:
            if row.scheme == "16-sqam":
                assert row.flags == (FLAG_ANALYTICAL,)
                assert row.aser_analytical is None
            else:
                assert row.flags == ()
                assert 0 < row.aser_analytical < 1
        assert flag_summary(curve)["flags"] == {FLAG_ANALYTICAL: 3}

    def test_invalid_geometry_is_flagged_not_fatal(self):
        spec = _spec(axis=SweepAxis.D_SR, axis_range=(100.0, 1100.0, 500.0))
        curve = run_sweep(SnrModel(), spec)
        by_value = {row.axis_value: row for row in curve.rows}
        assert by_value[1100.0].flags == (FLAG_GEOMETRY,)
        assert by_value[1100.0].aser_analytical is None
        assert by_value[600.0].aser_analytical is not None
        summary = flag_summary(curve)
        assert summary["flagged_rows"] == 1
        assert summary["flags"] == {FLAG_GEOMETRY: 1}

    def test_omega_m_sweep(self):
        spec = _spec(axis=SweepAxis.OMEGA_M, axis_range=(0.5, 1.5, 1.0), fixed_snr_db=30.0)
        rows = run_sweep(SnrModel(), spec).rows
        assert rows[0].aser_analytical > rows[1].aser_analytical

    def test_monte_carlo_columns(self):
        spec = _spec(outputs=frozenset({OutputKind.MC}), sim=SimConfig(trials=20_000, seed=1, partitions=2))
        rows = run_sweep(SnrModel(), spec).rows
        assert all(row.mc_trials == 20_000 for row in rows)
        assert all(row.aser_analytical is None for row in rows)
        assert all(row.mc_stderr > 0 for row in rows)


class TestEmit:
    def test_files(self, tmp_path):
        spec = _spec(out_path=tmp_path / "out" / "curve.csv")
        curve = run_sweep(SnrModel(), spec)
        files = emit(curve, spec, SnrModel())

        text = files.csv_path.read_text()
        assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
        assert text.splitlines()[0] == "snr_db,scheme,aser_analytical,aser_asymptotic,aser_mc,mc_stderr,mc_trials,flags"
        assert ",,,,," in text.splitlines()[1]

        parsed = read_csv(files.csv_path)
        assert len(parsed) == len(curve.rows)
        for line, row in zip(parsed, curve.rows):
            assert float(line["snr_db"]) == row.snr_db
            assert float(line["aser_analytical"]) == row.aser_analytical
            assert line["aser_mc"] is None

        assert "curve.csv" in files.plot_path.read_text()
        assert files.plot_path.name == "curve_plot.py"

        meta = json.loads(files.meta_path.read_text())
        assert meta["csv_sha256"] == hashlib.sha256(text.encode()).hexdigest()
        assert meta["rows"] == 3
        assert parse_config_text(meta["config"]) == (SnrModel(), spec)

    def test_non_snr_axis_header(self):
        spec = _spec(axis=SweepAxis.D_SR, axis_range=(100.0, 1100.0, 500.0))
        text = curve_to_csv(run_sweep(SnrModel(), spec))
        lines = text.splitlines()
        assert lines[0].startswith("d_sr,scheme,")
        assert lines[3].startswith("1100,")
        assert lines[3].endswith(FLAG_GEOMETRY)

    def test_byte_identical_reruns(self, tmp_path):
        outputs = frozenset({OutputKind.ANALYTICAL, OutputKind.MC})
        sim = SimConfig(trials=20_000, seed=7, partitions=4)
        written = []
        for name in ("a", "b"):
            spec = _spec(outputs=outputs, sim=sim, out_path=tmp_path / name / "curve.csv")
            files = emit(run_sweep(SnrModel(), spec), spec)
            written.append((files.csv_path.read_bytes(), files.meta_path.read_bytes()))
        assert written[0] == written[1]
