import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coldspin import (
    CollectiveSpinState,
    NearResonanceError,
    StokesState,
    ValidationError,
    alignment_interact,
    coherent_pulse,
    coherent_spin_state,
    collective_from_amplitudes,
    coupling_constant,
    decay_mean_z,
    default_atom_spec,
    detuning_factor,
    faraday_angle,
    od_from_angle,
    output_variance,
    qnd_interact,
    rotation_cross_section,
    scale_atom_number,
    single_atom_pseudospin,
)

SPEC = default_atom_spec()
AREA = 1.0e6 / 2.65e14  # benchmark beam area: 1e6 atoms at n_c=2.65e14


def g_tilde_oracle(detuning_hz):
    """High-precision reference for the rotation cross section, computed
    from scratch with 40-digit arithmetic so round-off in the package
    implementation cannot hide sign or weight errors."""
    from mpmath import mp, mpf

    mp.dps = 40
    gamma = mpf("6066600.0")
    lam = mpf("780.241209686e-9")
    splittings = (mpf(0), mpf("72218000.0"), mpf("229165000.0"))
    weights = (mpf(-4), mpf(-5), mpf(5))
    delta = mpf(repr(detuning_hz))
    total = mpf(0)
    for w, s in zip(weights, splittings):
        total += w / (delta - s)
    return float(gamma * lam**2 / (16 * mp.pi) * total)


@pytest.mark.parametrize("detuning_hz", [-2.3e9, -1.6e9, -0.8e9, 3.5e9, -6.8e9])
def test_rotation_cross_section_against_oracle(detuning_hz):
    assert rotation_cross_section(detuning_hz, SPEC) == pytest.approx(
        g_tilde_oracle(detuning_hz), rel=1e-12
    )


def test_detuning_factor_pole_positions():
    # physical convention: each pole sits at the F' resonance itself
    assert detuning_factor(-1.6e9, 0, SPEC) == pytest.approx(-6.25e-10, rel=1e-12)
    assert detuning_factor(-1.6e9, 1, SPEC) == pytest.approx(
        1.0 / (-1.6e9 - 72.218e6), rel=1e-12
    )
    with pytest.raises(NearResonanceError):
        detuning_factor(72.218e6 + 3 * SPEC.linewidth_hz, 1, SPEC)
    # guard can be widened past the default
    with pytest.raises(NearResonanceError):
        detuning_factor(-1e9, 0, SPEC, guard_linewidths=2e8)


def test_detuning_factor_literal_convention_flips_pole():
    # literal convention: pole of the F'=1 term sits at -72.218 MHz instead
    assert detuning_factor(-1.6e9, 1, SPEC, convention="literal") == pytest.approx(
        1.0 / (-1.6e9 + 72.218e6), rel=1e-12
    )
    with pytest.raises(NearResonanceError):
        detuning_factor(-72.218e6, 1, SPEC, convention="literal")
    detuning_factor(-72.218e6, 1, SPEC)  # fine physically: 72 MHz off F'=1


def test_detuning_factor_rejects_bad_arguments():
    with pytest.raises(ValidationError):
        detuning_factor(-1.6e9, 3, SPEC)
    with pytest.raises(ValidationError):
        detuning_factor(-1.6e9, 0, SPEC, convention="both")
    with pytest.raises(ValidationError):
        detuning_factor(-1.6e9, 0, SPEC, guard_linewidths=-1.0)


def test_guard_zero_admits_any_off_pole_detuning():
    value = detuning_factor(1.0, 0, SPEC, guard_linewidths=0.0)
    assert value == 1.0


@pytest.mark.parametrize(
    "axis,index,sign",
    [("x", 0, 1), ("y", 1, 1), ("z", 2, 1), ("-x", 0, -1), ("-y", 1, -1), ("-z", 2, -1)],
)
def test_coherent_spin_state_axes(axis, index, sign):
    state = coherent_spin_state(1e6, axis)
    assert state.mean_j[index] == sign * 5e5
    assert state.var_j[index] == 0.0
    for k in range(3):
        if k != index:
            assert state.mean_j[k] == 0.0
            assert state.var_j[k] == 2.5e5  # n/4 projection noise


def test_coherent_spin_state_rejects_unknown_axis():
    with pytest.raises(ValidationError):
        coherent_spin_state(1e6, "w")
    with pytest.raises(ValidationError):
        coherent_spin_state(-1.0)


def test_mean_ball_validation():
    # |mean| up to (1 + slack) n/2 tolerated, beyond that rejected
    CollectiveSpinState((0.0, 0.0, 52.4), (0.0, 0.0, 0.0), 100)
    with pytest.raises(ValidationError):
        CollectiveSpinState((0.0, 0.0, 53.0), (0.0, 0.0, 0.0), 100)
    with pytest.raises(ValidationError):
        CollectiveSpinState((0.0, 0.0, 10.0), (0.0, -1.0, 0.0), 100)


def test_coherent_pulse_polarizations():
    for pol, mean in [
        ("x", (2e6, 0.0, 0.0)),
        ("y", (-2e6, 0.0, 0.0)),
        ("+45", (0.0, 2e6, 0.0)),
        ("-45", (0.0, -2e6, 0.0)),
        ("sigma+", (0.0, 0.0, 2e6)),
        ("sigma-", (0.0, 0.0, -2e6)),
    ]:
        pulse = coherent_pulse(4e6, 1e-6, pol)
        assert pulse.mean_s == mean
        assert pulse.var_s == (1e6, 1e6, 1e6)  # n/4 shot noise on all three
    with pytest.raises(ValidationError):
        coherent_pulse(4e6, 1e-6, "elliptical")
    with pytest.raises(ValidationError):
        coherent_pulse(4e6, 0.0)


def test_qnd_mean_map_and_passthrough():
    cp = coupling_constant(-1.6e9, AREA, SPEC)
    light = coherent_pulse(4e6, 1e-6, "x")
    atoms = coherent_spin_state(1e6, "z")
    light_out, atoms_out = qnd_interact(light, atoms, cp)
    # rotation writes <J_z> onto S_y
    assert light_out.mean_s[1] == cp.g * 5e5 * 2e6
    # back action writes <S_z> onto J_y; zero for linear x polarization
    assert atoms_out.mean_j[1] == 0.0
    # probed components pass through bit for bit
    assert light_out.mean_s[2] == light.mean_s[2]
    assert light_out.var_s[2] == light.var_s[2]
    assert atoms_out.mean_j[2] == atoms.mean_j[2]
    assert atoms_out.var_j[2] == atoms.var_j[2]
    assert light_out.n_photons == light.n_photons
    assert atoms_out.n_atoms == atoms.n_atoms


def test_qnd_variance_matches_closed_form():
    # atoms pumped along x so J_z carries the n/4 projection noise the
    # probe is supposed to read out
    cp = coupling_constant(-1.6e9, AREA, SPEC)
    light = coherent_pulse(4e6, 1e-6, "x")
    atoms = coherent_spin_state(1e6, "x")
    light_out, _ = qnd_interact(light, atoms, cp)
    g = cp.g
    expected = 1e6 + g * g * ((2e6) ** 2 * 2.5e5 + 0.0**2 * 1e6 + 1e6 * 2.5e5)
    assert light_out.var_s[1] == expected
    # the mean-dominated budget formula drops the var*var cross term,
    # a relative 1/N_L correction
    assert light_out.var_s[1] == pytest.approx(output_variance(4e6, 1e6, g), rel=1e-5)
    assert light_out.var_s[1] > output_variance(4e6, 1e6, g)


def test_output_variance_shot_noise_floor():
    assert output_variance(4e6, 0.0, 1e-7) == 1e6
    assert output_variance(4e6, 1e6, 0.0) == 1e6
    with pytest.raises(ValidationError):
        output_variance(-1.0, 0.0, 1e-7)


finite = st.floats(
    min_value=-1e5, max_value=1e5, allow_nan=False, allow_infinity=False
)
variances = st.floats(min_value=0.0, max_value=1e7, allow_nan=False)
couplings = st.floats(min_value=-1e-4, max_value=1e-4, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(
    st.tuples(finite, finite, finite),
    st.tuples(variances, variances, variances),
    st.tuples(finite, finite, finite),
    st.tuples(variances, variances, variances),
    couplings,
)
def test_qnd_conservation_property(mean_s, var_s, mean_j, var_j, g):
    """The probed projections are exactly conserved and no variance ever
    shrinks, whatever the state and coupling."""
    # size the photon/atom numbers to cover the means after the rotation,
    # which can exceed the input ball for large g * J_z
    growth_s = abs(g) * abs(mean_j[2]) * abs(mean_s[0])
    growth_j = abs(g) * abs(mean_s[2]) * abs(mean_j[0])
    radius_s = 4.0 * (math.sqrt(sum(m * m for m in mean_s)) + growth_s + 1.0)
    radius_j = 4.0 * (math.sqrt(sum(m * m for m in mean_j)) + growth_j + 1.0)
    light = StokesState(mean_s, var_s, radius_s, 1e-6)
    atoms = CollectiveSpinState(mean_j, var_j, radius_j)
    from coldspin import CouplingParams

    cp = CouplingParams(detuning_hz=-1.6e9, area_m2=AREA, g=g, g_tilde_m2=g * AREA)
    light_out, atoms_out = qnd_interact(light, atoms, cp)
    assert light_out.mean_s[2] == light.mean_s[2]
    assert light_out.var_s[2] == light.var_s[2]
    assert atoms_out.mean_j[2] == atoms.mean_j[2]
    assert atoms_out.var_j[2] == atoms.var_j[2]
    assert light_out.var_s[1] >= light.var_s[1]
    assert atoms_out.var_j[1] >= atoms.var_j[1]
    assert light_out.var_s[0] == light.var_s[0]
    assert atoms_out.var_j[0] == atoms.var_j[0]


def test_faraday_angle_sign_and_magnitude():
    cp = coupling_constant(-1.6e9, AREA, SPEC)
    up = coherent_spin_state(1e6, "z")
    down = coherent_spin_state(1e6, "-z")
    assert faraday_angle(up, cp.g) == pytest.approx(cp.g * 5e5, rel=1e-15)
    assert faraday_angle(down, cp.g) == -faraday_angle(up, cp.g)
    # benchmark value: half a column density times g_tilde
    assert faraday_angle(up, cp.g) == pytest.approx(
        0.5 * 2.65e14 * g_tilde_oracle(-1.6e9), rel=1e-12
    )


@pytest.mark.parametrize("detuning_hz", [-2.3e9, -1.6e9, -0.8e9])
def test_od_is_detuning_independent(detuning_hz):
    """theta varies strongly with detuning but the inferred resonant OD must
    not: it is a property of the cloud alone."""
    n_c = 2.65e14
    theta = 0.5 * n_c * rotation_cross_section(detuning_hz, SPEC)
    od = od_from_angle(theta, detuning_hz, SPEC)
    assert od == pytest.approx(SPEC.cross_section_m2 * n_c, rel=1e-12)


def test_single_atom_pseudospin_stretched_states():
    # amplitudes ordered (m=-1, m=0, m=+1)
    assert single_atom_pseudospin((0.0, 0.0, 1.0)) == pytest.approx(
        (0.0, 0.0, 0.5), abs=1e-12
    )
    assert single_atom_pseudospin((1.0, 0.0, 0.0)) == pytest.approx(
        (0.0, 0.0, -0.5), abs=1e-12
    )


def test_single_atom_pseudospin_superpositions():
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    plus = single_atom_pseudospin((inv_sqrt2, 0.0, inv_sqrt2))
    minus = single_atom_pseudospin((-inv_sqrt2, 0.0, inv_sqrt2))
    assert plus == pytest.approx((0.5, 0.0, 0.0), abs=1e-12)
    assert minus == pytest.approx((-0.5, 0.0, 0.0), abs=1e-12)


def test_single_atom_pseudospin_rejects_unnormalized():
    with pytest.raises(ValidationError):
        single_atom_pseudospin((1.0, 0.0, 1.0))


def test_collective_from_amplitudes_scales_linearly():
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    one = collective_from_amplitudes((inv_sqrt2, 0.0, inv_sqrt2), 1.0)
    many = collective_from_amplitudes((inv_sqrt2, 0.0, inv_sqrt2), 1e6)
    for k in range(3):
        assert many.mean_j[k] == pytest.approx(1e6 * one.mean_j[k], abs=1e-6)
        assert many.var_j[k] == pytest.approx(1e6 * one.var_j[k], rel=1e-12)
    assert many.n_atoms == 1e6


def test_collective_pumped_state_matches_coherent_constructor():
    built = collective_from_amplitudes((0.0, 0.0, 1.0), 1e6)
    direct = coherent_spin_state(1e6, "z")
    assert built.mean_j == pytest.approx(direct.mean_j, abs=1e-9)
    assert built.var_j == pytest.approx(direct.var_j, rel=1e-12)


def test_scale_atom_number():
    atoms = coherent_spin_state(1e6, "z")
    half = scale_atom_number(atoms, 0.5)
    assert half.n_atoms == 5e5
    assert half.mean_j == (0.0, 0.0, 2.5e5)
    assert half.var_j == (1.25e5, 1.25e5, 0.0)
    none = scale_atom_number(atoms, 0.0)
    assert none.n_atoms == 0.0
    with pytest.raises(ValidationError):
        scale_atom_number(atoms, -0.1)


def test_decay_mean_z():
    atoms = coherent_spin_state(1e6, "z")
    decayed = decay_mean_z(atoms, 1e-4)
    assert decayed.mean_j[2] == 5e5 * (1.0 - 1e-4)
    assert decayed.var_j == atoms.var_j
    assert decayed.n_atoms == atoms.n_atoms
    with pytest.raises(ValidationError):
        decay_mean_z(atoms, 1.5)


def test_alignment_interact_rotates_circular_light():
    atoms = coherent_spin_state(1e6, "x")
    light = coherent_pulse(4e6, 1e-6, "sigma+")
    out = alignment_interact(light, atoms, 1e-9)
    phi = 1e-9 * 5e5
    assert out.mean_s[1] == phi * 2e6
    assert out.mean_s[2] == light.mean_s[2]
    assert out.var_s[1] == light.var_s[1] + phi * phi * light.var_s[2]


def test_coupling_constant_bundles_geometry():
    cp = coupling_constant(-1.6e9, AREA, SPEC)
    assert cp.g == pytest.approx(cp.g_tilde_m2 / AREA, rel=1e-15)
    assert cp.detuning_hz == -1.6e9
    with pytest.raises(ValidationError):
        coupling_constant(-1.6e9, 0.0, SPEC)


def test_states_are_value_objects():
    a = coherent_spin_state(10, "z")
    b = coherent_spin_state(10, "z")
    assert a == b
    assert hash(a) == hash(b)
