from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcollide.collision import builtin_system
from qcollide.gates import DenseUnitary, GateCounts, GateSequence, PauliRotation, PhaseRecord, count_gates
from qcollide.ledger import (
    SWEEP_HEADER,
    amplitude_error,
    error_metric,
    fidelity_report,
    leakage,
    merge_adjacent,
    min_gates_for_fidelity,
    sweep,
    sweep_csv,
)
from qcollide.pauli import PauliString
from qcollide.propagators import SchemeSpec, propagate, reference_oracle
from qcollide.rescale import RescaledSchedule, build_schedule

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0 + 0j, -1.0])
I2 = np.eye(2)


@pytest.fixture(scope="module")
def si_he():
    sch = build_schedule(builtin_system("si_he_4ch"))
    return sch, reference_oracle(sch, tol=1e-20)


def test_error_metric_examples():
    e1, e2 = np.eye(4)[0].astype(complex), np.eye(4)[1].astype(complex)
    assert error_metric(e1, e1) == 0
    assert error_metric(e1, e2) == 0.5
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=(2, 8)) + 1j * rng.normal(size=(2, 8))
    assert error_metric(a, b) == pytest.approx(sum(abs(x - y) ** 2 for x, y in zip(a, b)) / 8)
    assert amplitude_error(e1, e2) == pytest.approx(np.sqrt(0.5))


def test_error_metric_rejects_mismatch():
    with pytest.raises(ValueError):
        error_metric(np.ones(4), np.ones(8))


def test_error_metric_phase_behaviour():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(2, 4)) + 1j * rng.normal(size=(2, 4))
    ph = np.exp(0.7j)
    assert error_metric(ph * a, ph * b) == pytest.approx(error_metric(a, b))
    assert error_metric(ph * a, a) > 0.1


def test_leakage():
    psi = np.array([0.6, 0.0, 0.0, 0.8])
    assert leakage(psi, 3) == pytest.approx(0.64)
    np.testing.assert_allclose(leakage(np.array([psi, np.eye(4)[0]]), 3), [0.64, 0.0])


def test_count_gates_by_weight():
    seq = [
        PauliRotation(PauliString("XI"), 0.1),
        PauliRotation(PauliString("ZZ"), 0.1),
        PauliRotation(PauliString("XYZ"), 0.1),
        PauliRotation(PauliString("II"), 0.1),
        PhaseRecord(0.3),
        DenseUnitary(np.eye(4)),
    ]
    c = count_gates(seq)
    assert (c.n_1q, c.n_2q, c.n_3q, c.n_dense, c.phase_records) == (1, 1, 1, 1, 2)
    assert c.total == 4


gate_strategy = st.one_of(
    st.builds(lambda s, t: PauliRotation(PauliString(s), t), st.text("IXYZ", min_size=3, max_size=3), st.floats(-1, 1)),
    st.builds(PhaseRecord, st.floats(-1, 1)),
)


@settings(max_examples=50, deadline=None)
@given(st.lists(gate_strategy, max_size=20), st.lists(gate_strategy, max_size=20))
def test_count_gates_additive(a, b):
    assert count_gates(a + b) == count_gates(a) + count_gates(b)
    c = count_gates(a)
    assert c.total + c.phase_records == len(a)


def _constant(H, T=1.0):
    return RescaledSchedule(np.array([0.0, T]), np.array([H, H]), interpolation="linear")


def test_first_order_counts_per_term():
    # weight-1: XI, IZ; weight-2: XX, ZZ
    H = 0.3 * np.kron(X, I2) - 0.2 * np.kron(I2, Z) + 0.1 * np.kron(X, X) + 0.4 * np.kron(Z, Z)
    N = 5
    base = propagate(_constant(H), 2, SchemeSpec(4, 1), N).counts
    assert (base.n_1q, base.n_2q) == (N * 2, N * 2)
    for b, factor in ((2, 2), (4, 18)):
        c = propagate(_constant(H), 2, SchemeSpec(4, b), N).counts
        assert (c.n_1q, c.n_2q) == (factor * base.n_1q, factor * base.n_2q)


@pytest.mark.parametrize("token", ["1,0,0", "4,0,0", "4,1,0", "4,2,3/2", "4,1,5/2"])
def test_counts_linear_in_N(token):
    sch = build_schedule(builtin_system("si_he_5ch"))
    spec = SchemeSpec.parse(token)
    c1 = propagate(sch, None, spec, 4, keep_gates=False).counts
    c2 = propagate(sch, None, spec, 8, keep_gates=False).counts
    assert (c2.n_1q, c2.n_2q, c2.n_3q, c2.n_dense) == (2 * c1.n_1q, 2 * c1.n_2q, 2 * c1.n_3q, 2 * c1.n_dense)


def test_time_symmetric_step_has_no_commutator_terms():
    # odd N puts one step symmetric about closest approach, where H1 = H2
    sch = build_schedule(builtin_system("si_he_5ch"))
    res = propagate(sch, None, SchemeSpec(4, 1), 3)
    per_step = [[g for g in res.gates if g.step == k] for k in range(3)]
    assert len(per_step[0]) == len(per_step[2]) > len(per_step[1])
    assert all(g.string.n_y % 2 == 0 for g in per_step[1])
    assert any(g.string.n_y % 2 == 1 for g in per_step[0])


def test_physical_schemes_have_no_three_qubit_gates():
    sch = build_schedule(builtin_system("o_h_8ch"))
    for token in ("4,1,3/2", "4,2,3/2", "4,4,3/2", "4,1,5/2"):
        spec = SchemeSpec.parse(token)
        assert spec.is_physical(3)
        c = propagate(sch, None, spec, 2, keep_gates=False).counts
        assert c.n_3q == 0 and c.n_dense == 0 and c.n_2q > 0


def test_gadget_schemes_replace_each_three_qubit_rotation():
    sch = build_schedule(builtin_system("o_h_8ch"))
    bare = propagate(sch, None, SchemeSpec(4, 2), 2, keep_gates=False).counts
    for c, cost in ((Fraction(3, 2), 4), (Fraction(5, 2), 68)):
        g = propagate(sch, None, SchemeSpec(4, 2, c), 2, keep_gates=False).counts
        assert g.n_2q == bare.n_2q + cost * bare.n_3q
        assert g.n_1q == bare.n_1q


def test_sweep_records(si_he):
    sch, oracle = si_he
    recs = sweep(sch, None, SchemeSpec(1, 0), [64, 16, 32, 16], oracle)
    assert [r.N for r in recs] == [16, 32, 64]
    assert all(r.error >= 0 for r in recs)
    assert recs[0].dt == pytest.approx(sch.T_qc / 16)
    text = sweep_csv(recs, "# test\n")
    lines = text.splitlines()
    assert lines[0] == "# test" and lines[1] == SWEEP_HEADER and len(lines) == 5
    assert lines[2].split(",")[:2] == ["16", repr(sch.T_qc / 16)]


def test_sweep_rejects_empty(si_he):
    with pytest.raises(ValueError):
        sweep(si_he[0], None, SchemeSpec(1, 0), [], si_he[1])


def test_sweep_threads_identical(si_he):
    sch, oracle = si_he
    a = sweep(sch, None, SchemeSpec(4, 2), [8, 16, 32, 64], oracle, threads=1)
    b = sweep(sch, None, SchemeSpec(4, 2), [8, 16, 32, 64], oracle, threads=3)
    assert sweep_csv(a) == sweep_csv(b)


def test_magnus_beats_crude_at_equal_gates(si_he):
    sch, oracle = si_he
    Ns = [8, 16, 32, 64, 128]
    crude = {r.counts.total: r.error for r in sweep(sch, None, SchemeSpec(1, 0), Ns, oracle)}
    magnus = {r.counts.total: r.error for r in sweep(sch, None, SchemeSpec(4, 0), Ns, oracle)}
    assert all(magnus[n] < crude[n] for n in crude)


def test_min_gates_constant_schedule():
    H = 1e7 * np.kron(X, Z)
    sch = _constant(H, 1e-7)
    oracle = reference_oracle(sch, q=2)
    r = min_gates_for_fidelity(sch, 2, SchemeSpec(4, 0), oracle)
    assert r.feasible and r.N_min == 1 and r.counts.n_dense == 1


def test_min_gates_bisection(si_he):
    sch, oracle = si_he
    for token in ("1,0,0", "4,1,0"):
        spec = SchemeSpec.parse(token)
        r = min_gates_for_fidelity(sch, None, spec, oracle, threshold=1e-3)
        err = lambda N: error_metric(propagate(sch, None, spec, N, keep_gates=False).psi_final, oracle)
        assert r.N_min > 1
        assert err(r.N_min) < 1e-3 <= err(r.N_min - 1)
        assert r.error == pytest.approx(err(r.N_min))


def test_min_gates_infeasible(si_he):
    sch, oracle = si_he
    r = min_gates_for_fidelity(sch, None, SchemeSpec(1, 0), oracle, threshold=1e-12, n_cap=64)
    assert not r.feasible and r.counts is None


def test_fidelity_report_layout(si_he):
    sch, oracle = si_he
    results = [min_gates_for_fidelity(sch, None, SchemeSpec.parse(t), oracle) for t in ("1,0,0", "4,1,0")]
    results.append(min_gates_for_fidelity(sch, None, SchemeSpec(1, 0), oracle, threshold=1e-12, n_cap=4))
    text = fidelity_report(results, "si_he_4ch")
    lines = text.splitlines()
    assert lines[0] == "si_he_4ch"
    assert lines[1].split() == ["scheme", "N", "1-qubit", "2-qubit", "3-qubit", "dense", "E"]
    assert "infeasible" in lines[-1]
    assert len({len(l) for l in lines[1:]}) == 1


def test_merge_adjacent():
    P, Q = PauliString("XZ"), PauliString("ZZ")
    seq = GateSequence([PauliRotation(P, 0.1), PauliRotation(P, 0.2), PauliRotation(Q, 0.5), PauliRotation(Q, -0.5)])
    merged = merge_adjacent(seq)
    assert len(merged) == 1 and merged[0].theta == pytest.approx(0.3)
    np.testing.assert_allclose(merged.unitary(4), seq.unitary(4), atol=1e-15)
    assert count_gates(seq).total == 4


def test_gate_counts_addition():
    assert GateCounts(1, 2, 3, 4, 5) + GateCounts(1, 1, 1, 1, 1) == GateCounts(2, 3, 4, 5, 6)
