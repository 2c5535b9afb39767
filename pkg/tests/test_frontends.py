import itertools
import json

import pytest

from cegis.loop import solve
from cegis.types import SolverConfig, Verdict
from formula.ast import EXISTS, FORALL, BoolConst, BoolOp, Op, Var
from formula.skolem import skolemize
from frontends.corpus import load_corpus
from frontends.loops import (
    NONTERMINATION,
    SAFETY,
    TERMINATION,
    encode_loop,
    initial_state_symbol,
    parse_loop,
)
from frontends.qbf import QbfFormula, cnf_matrix, negate_qbf, parse_qdimacs, qbf_instance, random_qbf
from frontends.superopt import encode_superopt
from lang.opcodes import Opcode
from lang.program import Program, with_width
from lang.text import parse_program
from oracles import qbf_truth
from utils.errors import ArityMismatch, FormulaSyntaxError, UnknownSymbol
from verification.counterexample import find_counterexample

COUNT_TO_TEN = """
(loop
  (width 8)
  (vars x)
  (init (eq x 0))
  (guard (lt x 10))
  (body (eq x' (add x 1)))
  (goal safety)
  (assert (eq x {target})))
"""

COUNT_DOWN = """
(loop
  (width 8)
  (vars x)
  (guard (lt 0 x))
  (body (eq x' (sub x 1)))
  (goal termination))
"""

SPIN = """
(loop
  (width {width})
  (vars x)
  (guard {guard})
  (body (eq x' x))
  (goal {goal}))
"""


def loop_instance(text):
    return skolemize(encode_loop(parse_loop(text)), label="loop")


def program(text, width, constants=()):
    return parse_program(text, arity=1, width=width, constants=constants)


TWO_VARIABLE_PREFIXES = [
    tuple(zip(quantifiers, order))
    for order in (("v1", "v2"), ("v2", "v1"))
    for quantifiers in itertools.product((FORALL, EXISTS), repeat=2)
]


def truth_table_matrix(table):
    """CNF over v1, v2 whose models are the set bits of a 4-bit table."""
    clauses = []
    for k, (a, b) in enumerate(itertools.product((0, 1), repeat=2)):
        if not table >> k & 1:
            clauses.append([-1 if a else 1, -2 if b else 2])
    return cnf_matrix(clauses)


class TestLoops:

    @staticmethod
    def test_safety_invariant_is_inductive():
        instance = loop_instance(COUNT_TO_TEN.format(target=10))
        invariant = {"S": program("t1 = le x0 c0", 8, [10])}
        assert find_counterexample(invariant, instance, 8) is None

    @staticmethod
    def test_wrong_assertion_defeats_the_invariant():
        instance = loop_instance(COUNT_TO_TEN.format(target=11))
        invariant = {"S": program("t1 = le x0 c0", 8, [10])}
        assert find_counterexample(invariant, instance, 8) is not None

    @staticmethod
    def test_safety_prefix_quantifies_both_states():
        formula = encode_loop(parse_loop(COUNT_TO_TEN.format(target=10)))
        assert [v.name for v in formula.first_order] == ["x", "x'"]
        assert [(s.name, s.arity) for s in formula.second_order] == [("S", 1)]

    @staticmethod
    def test_ranking_function_for_a_countdown():
        instance = loop_instance(COUNT_DOWN)
        witnesses = {"R": program("t1 = min x0 x0", 8), "W": program("t1 = eq x0 x0", 8)}
        assert find_counterexample(witnesses, instance, 8) is None

    @staticmethod
    def test_no_ranking_function_for_a_spin():
        instance = loop_instance(SPIN.format(width=4, guard="true", goal=TERMINATION))
        witnesses = {"R": program("t1 = min x0 x0", 4), "W": program("t1 = eq x0 x0", 4)}
        assert find_counterexample(witnesses, instance, 4) is not None

    @staticmethod
    def test_recurrence_set_for_a_spin():
        instance = loop_instance(SPIN.format(width=4, guard="(neq x 0)", goal=NONTERMINATION))
        start = initial_state_symbol("x")
        assert {f.name for f in instance.functions} == {"N", "C", start}
        witnesses = {
            "N": program("t1 = neq x0 c0", 4, [0]),
            "C": program("t1 = min x0 x0", 4),
            start: Program(0, 1, 4, (1,), ()),
        }
        assert find_counterexample(witnesses, instance, 4) is None
        witnesses[start] = Program(0, 1, 4, (0,), ())
        assert find_counterexample(witnesses, instance, 4) is not None

    @staticmethod
    def test_goal_defaults_to_safety():
        text = "(loop (width 4) (vars x) (guard (lt x 3)) (body (eq x' (add x 1))) (assert (lt x 4)))"
        loop_file = parse_loop(text)
        assert loop_file.goal == SAFETY
        assert loop_file.system.init == BoolConst(True)

    @pytest.mark.parametrize("text", [
        "(loop (width 4) (guard true) (body true) (goal termination))",
        "(loop (vars x) (body true) (goal termination))",
        "(loop (vars x) (guard true) (body true))",
        "(loop (vars x) (guard true) (body true) (goal forever))",
        "(loop (vars x) (guard true) (guard true) (body true) (goal termination))",
        "(loop (vars x) (guard true) (body true) (goal termination) (step 1))",
        "(vars x)",
    ])
    def test_malformed_loops(self, text):
        with pytest.raises(FormulaSyntaxError):
            parse_loop(text)

    @staticmethod
    def test_undeclared_variable_in_body():
        with pytest.raises(UnknownSymbol):
            parse_loop("(loop (vars x) (guard true) (body (eq y' x)) (goal termination))")

    @staticmethod
    @pytest.mark.slow
    def test_solver_finds_a_safety_invariant():
        instance = loop_instance(COUNT_TO_TEN.format(target=10).replace("(width 8)", "(width 5)"))
        config = SolverConfig(strategies=["explicit", "symbolic"], deterministic=True, timeout=300, initial_width=5)
        result = solve(instance, config)
        assert result.verdict is Verdict.SAT
        assert find_counterexample(result.witnesses, instance, 5) is None

    @staticmethod
    def test_solver_proves_a_countdown_terminates(explicit_config):
        instance = loop_instance(COUNT_DOWN.replace("(width 8)", "(width 2)"))
        result = solve(instance, explicit_config)
        assert result.verdict is Verdict.SAT
        assert find_counterexample(result.witnesses, instance, 2) is None

    @staticmethod
    def test_solver_finds_a_recurrence_set_for_a_spin(explicit_config):
        instance = loop_instance(SPIN.format(width=2, guard="(neq x 0)", goal=NONTERMINATION))
        result = solve(instance, explicit_config)
        assert result.verdict is Verdict.SAT
        assert find_counterexample(result.witnesses, instance, 2) is None

    @staticmethod
    @pytest.mark.slow
    def test_spin_has_no_termination_proof():
        instance = loop_instance(SPIN.format(width=1, guard="true", goal=TERMINATION))
        config = SolverConfig(strategies=["symbolic"], deterministic=True, timeout=300, initial_width=1)
        result = solve(instance, config)
        assert result.verdict is Verdict.UNSAT
        assert result.reason == "bound"

    @staticmethod
    @pytest.mark.slow
    def test_countdown_has_no_recurrence_set():
        instance = loop_instance(
            COUNT_DOWN.replace("(width 8)", "(width 1)").replace("(goal termination)", "(goal nontermination)"))
        config = SolverConfig(strategies=["symbolic"], deterministic=True, timeout=300, initial_width=1)
        result = solve(instance, config)
        assert result.verdict is Verdict.UNSAT
        assert result.reason == "bound"


class TestQbf:

    @staticmethod
    def test_qdimacs_prefix_and_free_variables():
        qbf = parse_qdimacs("c example\np cnf 3 2\na 1 0\ne 2 0\n1 -2 0\n2 3 0\n")
        assert qbf.prefix == ((EXISTS, "v3"), (FORALL, "v1"), (EXISTS, "v2"))
        assert qbf.matrix == BoolOp("band", (
            BoolOp("bor", (Var("v1"), BoolOp("bnot", (Var("v2"),)))),
            BoolOp("bor", (Var("v2"), Var("v3"))),
        ))

    @pytest.mark.parametrize("text", [
        "1 2 0\n",
        "p cnf 2 1\n1 2 0\na 1 0\n",
        "p cnf 2 1\na 1\n1 2 0\n",
        "p cnf 2 1\na 3 0\n1 2 0\n",
        "p dnf 2 1\n",
        "c nothing here\n",
    ])
    def test_malformed_qdimacs(self, text):
        with pytest.raises(FormulaSyntaxError):
            parse_qdimacs(text)

    @staticmethod
    def test_cnf_matrix_edge_cases():
        assert cnf_matrix([]) == BoolConst(True)
        assert cnf_matrix([[1], []]) == BoolConst(False)
        assert cnf_matrix([[-2]]) == BoolOp("bnot", (Var("v2"),))

    @staticmethod
    def test_negation_is_an_involution():
        qbf = random_qbf(4, 5, seed=11)
        assert negate_qbf(negate_qbf(qbf)) == qbf
        assert qbf_truth(negate_qbf(qbf).prefix, negate_qbf(qbf).matrix) != qbf_truth(qbf.prefix, qbf.matrix)

    @staticmethod
    def test_prefix_must_bind_the_matrix():
        with pytest.raises(UnknownSymbol):
            QbfFormula(((FORALL, "a"),), Var("b"))
        with pytest.raises(ValueError):
            QbfFormula(((FORALL, "a"), (EXISTS, "a")), Var("a"))

    @staticmethod
    def test_skolem_witness_for_exclusive_or(explicit_config):
        qbf = QbfFormula(((FORALL, "a"), (EXISTS, "b")), Op(Opcode.XOR, (Var("a"), Var("b"))))
        instance = qbf_instance(qbf, "xor")
        result = solve(instance, explicit_config)
        assert result.verdict is Verdict.SAT
        assert find_counterexample(result.witnesses, instance, 1) is None

    @staticmethod
    def test_false_qbf_is_unsat(explicit_config):
        qbf = QbfFormula(((EXISTS, "a"), (FORALL, "b")), BoolOp("band", (Var("a"), Var("b"))))
        assert solve(qbf_instance(qbf), explicit_config).verdict is Verdict.UNSAT
        assert solve(qbf_instance(negate_qbf(qbf)), explicit_config).verdict is Verdict.SAT

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(20))
    def test_random_qbfs_match_the_game_tree(self, seed):
        qbf = random_qbf(3, 4, seed=seed)
        true_side = qbf if qbf_truth(qbf.prefix, qbf.matrix) else negate_qbf(qbf)
        config = SolverConfig(strategies=["explicit", "symbolic"], deterministic=True, timeout=300)
        instance = qbf_instance(true_side)
        result = solve(instance, config)
        assert result.verdict is Verdict.SAT
        assert find_counterexample(result.witnesses, instance, 1) is None

    @pytest.mark.slow
    @pytest.mark.parametrize("prefix", TWO_VARIABLE_PREFIXES)
    def test_every_two_variable_qbf_matches_the_game_tree(self, prefix, explicit_config):
        for table in range(16):
            qbf = QbfFormula(prefix, truth_table_matrix(table))
            instance = qbf_instance(qbf, f"table-{table}")
            result = solve(instance, explicit_config)
            expected = Verdict.SAT if qbf_truth(qbf.prefix, qbf.matrix) else Verdict.UNSAT
            assert result.verdict is expected, f"{prefix} table {table}"
            if expected is Verdict.SAT:
                assert find_counterexample(result.witnesses, instance, 1) is None

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(10))
    def test_exactly_one_of_a_qbf_and_its_negation_holds(self, seed):
        qbf = random_qbf(3, 4, seed=seed)
        config = SolverConfig(strategies=["explicit", "symbolic"], deterministic=True, timeout=300)
        verdicts = [solve(qbf_instance(side), config).verdict for side in (qbf, negate_qbf(qbf))]
        assert sorted(v.value for v in verdicts) == ["SAT", "UNSAT"]
        assert (verdicts[0] is Verdict.SAT) == qbf_truth(qbf.prefix, qbf.matrix)


class TestSuperopt:

    @staticmethod
    def test_reference_program_satisfies_its_own_encoding():
        reference = parse_program("prog 2 1 32 consts\nt1 = sle x1 x0\nt2 = xor x0 x1\nt3 = mul t1 t2\nt4 = xor t3 x1")
        instance = skolemize(encode_superopt(reference, width=4))
        assert instance.width == 4
        assert [v.name for v in instance.universals] == ["x0", "x1"]
        assert find_counterexample({"P": with_width(reference, 4)}, instance, 4) is None

    @staticmethod
    def test_identity_needs_one_instruction(explicit_config):
        instance = skolemize(encode_superopt(Var("x0"), arity=1, width=4))
        result = solve(instance, explicit_config)
        assert result.verdict is Verdict.SAT
        assert result.witnesses["P"].length == 1

    @staticmethod
    def test_expression_references_need_an_arity():
        with pytest.raises(ArityMismatch):
            encode_superopt(Var("x0"))
        with pytest.raises(UnknownSymbol):
            encode_superopt(Var("y"), arity=1)
        with pytest.raises(ArityMismatch):
            encode_superopt(parse_program("t1 = neg x0"), arity=2)

    @staticmethod
    def test_one_equation_per_output():
        formula = encode_superopt([Var("x1"), Var("x0")], arity=2, width=4)
        assert formula.second_order[0].out_count == 2

    @staticmethod
    @pytest.mark.slow
    def test_swap_is_found_at_small_width():
        reference = parse_program("prog 2 2 32 consts\nt1 = xor x0 x1\nt2 = xor t1 x0\nt3 = xor t1 t2")
        instance = skolemize(encode_superopt(reference, width=3))
        config = SolverConfig(strategies=["explicit", "symbolic"], deterministic=True, timeout=300, initial_width=3)
        result = solve(instance, config)
        assert result.verdict is Verdict.SAT
        assert result.witnesses["P"].length <= 3


class TestCorpus:

    @staticmethod
    def test_manifest_contents():
        cases = {c.id: c for c in load_corpus()}
        assert {f"P{i}" for i in range(1, 28)} | {"swap", "mul45"} == set(cases)
        assert cases["P1"].expected_length == 2
        assert cases["P14"].expected_length == 4
        assert cases["P22"].known_hard
        assert not cases["P1"].known_hard
        assert cases["mul45"].enable_shl

    @staticmethod
    def test_load_by_id():
        assert [c.id for c in load_corpus(ids=["P3", "swap"])] == ["P3", "swap"]

    @staticmethod
    def test_formula_files_agree_with_reference_programs():
        for case in load_corpus():
            if case.file is None:
                continue
            witness = {"P": with_width(case.reference, 8)}
            assert find_counterexample(witness, case.instance(), 8) is None, case.id

    @staticmethod
    def test_known_hard_cases_encode_their_reference():
        case = load_corpus(ids=["P20"])[0]
        assert case.file is None
        assert case.instance().width == 32

    @staticmethod
    def test_length_mismatch_is_rejected(tmp_path):
        manifest = {"cases": [{"id": "X", "name": "negate", "status": "solved", "expected_length": 3,
                               "reference": "prog 1 1 8 consts\nt1 = neg x0"}]}
        (tmp_path / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(ValueError):
            load_corpus(tmp_path)

    @pytest.mark.slow
    @pytest.mark.parametrize("case_id", ["P1", "P3", "P6"])
    def test_easy_cases_reach_their_reference_length(self, case_id):
        case = load_corpus(ids=[case_id])[0]
        config = SolverConfig(strategies=["explicit", "symbolic"], deterministic=True, timeout=600, target_width=8)
        result = solve(case.instance(), config)
        assert result.verdict is Verdict.SAT
        assert result.witnesses["P"].length == case.expected_length
