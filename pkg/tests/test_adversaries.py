from fractions import Fraction

import pytest

from fairdiv import (
    DomainError,
    Greedy1Allocator,
    Greedy2Allocator,
    Greedy3Allocator,
    Greedy3Adversary,
    InvariantError,
    MivAllocator,
    MivImpossibilityAdversary,
    check_alpha_ef1,
    check_alpha_mms,
    check_alpha_propx,
    check_alpha_prop1,
    greedy1_adversary,
    greedy2_adversary,
    impossibility_constants,
    prop1_ratio,
    run,
    run_adaptive,
    verify_greedy1_failure,
    verify_greedy2_failure,
)

F = Fraction


class TestGreedy1Adversary:
    def test_horizon_formula(self):
        assert greedy1_adversary(2, F(1, 10)).m == 40
        assert greedy1_adversary(3, F(1, 2)).m == 12

    def test_run_starves_agent_two(self):
        inst = greedy1_adversary(2, F(1, 10))
        trace = run(Greedy1Allocator(2), inst)
        assert all(owner == 1 for owner in trace.owners)
        # agent 2's term: 1 / (1 + (m-1)/2) = 2/41, ratio 4/41 < 1/10
        assert trace.alpha[1][-1] == F(2, 41)
        assert prop1_ratio(inst, trace.allocation) == F(4, 41)
        verify_greedy1_failure(trace, F(1, 10))

    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.parametrize("alpha", [F(1, 2), F(1, 4), F(1, 10)])
    def test_failure_certificate_across_targets(self, n, alpha):
        inst = greedy1_adversary(n, alpha)
        trace = run(Greedy1Allocator(n), inst)
        verify_greedy1_failure(trace, alpha)
        assert prop1_ratio(inst, trace.allocation) < alpha

    def test_verify_rejects_a_wrong_run(self):
        inst = greedy1_adversary(2, F(1, 2))
        trace = run(Greedy2Allocator(2), inst)  # mismatched allocator
        with pytest.raises(InvariantError):
            verify_greedy1_failure(trace, F(1, 2))

    def test_parameters_validated(self):
        with pytest.raises(DomainError):
            greedy1_adversary(1, F(1, 2))
        with pytest.raises(DomainError):
            greedy1_adversary(2, F(0))
        with pytest.raises(DomainError):
            greedy1_adversary(2, F(3, 2))

    def test_static_instance_is_idempotent(self):
        assert greedy1_adversary(2, F(1, 4)) == greedy1_adversary(2, F(1, 4))


class TestGreedy2Adversary:
    def test_horizon_uses_the_binding_inequality(self):
        # the final certificate needs 2/m < alpha/n, i.e. m > 2n/alpha
        assert greedy2_adversary(2, F(1, 2)).m == 9
        assert greedy2_adversary(2, F(1, 10)).m == 41

    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.parametrize("alpha", [F(1, 2), F(1, 4), F(1, 10)])
    def test_agent_one_keeps_only_the_first_good(self, n, alpha):
        inst = greedy2_adversary(n, alpha)
        trace = run(Greedy2Allocator(n), inst)
        assert trace.owners[0] == 1
        assert all(owner != 1 for owner in trace.owners[1:])
        verify_greedy2_failure(trace, alpha)
        assert prop1_ratio(inst, trace.allocation) < alpha


class TestGreedy3Adversary:
    def test_opening_schedule_and_state(self):
        adversary = Greedy3Adversary(F(1, 2), 10**4)
        allocator = Greedy3Allocator(2)
        owners = []
        for expected in (1, 2, 1):
            column = adversary.next_column(owners)
            assert column == [F(1), F(1)]
            owners.append(allocator.observe(column))
            assert owners[-1] == expected
        # first equalization columns: value 1/2 to agent 1, allocated to agent 2
        column = adversary.next_column(owners)
        assert column == [F(1, 2), F(0)]
        assert adversary._equalize_formula == 2

    def test_reaches_each_target_with_certificates(self):
        for target in (F(3, 5), F(1, 2), F(2, 5)):
            adversary = Greedy3Adversary(target, 10**6)
            result = run_adaptive(adversary, Greedy3Allocator(2))
            assert result.target_reached
            assert result.achieved_ratio < target
            assert result.achieved_ratio == prop1_ratio(
                result.trace.instance, result.trace.allocation
            )

    def test_emitted_values_never_unfreeze_the_outside_maximum(self):
        adversary = Greedy3Adversary(F(1, 2), 10**5)
        allocator = Greedy3Allocator(2)
        owners = []
        columns = []
        while (column := adversary.next_column(owners)) is not None:
            columns.append(column)
            owners.append(allocator.observe(column))
        for column in columns[3:]:
            assert column[0] <= 1 and column[1] <= 1
            assert set(column) <= {F(0), F(1, 2), F(1)}

    def test_harmonic_certificate_is_exact_per_cycle(self):
        adversary = Greedy3Adversary(F(2, 5), 10**6)
        result = run_adaptive(adversary, Greedy3Allocator(2))
        k = result.cycles
        rhs = F(3, 2) + sum((F(1, 2 * (s + 2)) for s in range(1, k + 1)), F(0))
        min_alpha = min(row[-1] for row in result.trace.alpha)
        assert 1 / min_alpha >= rhs

    def test_divergent_allocator_is_caught(self):
        adversary = Greedy3Adversary(F(1, 2), 10**4)
        with pytest.raises(InvariantError):
            run_adaptive(adversary, Greedy1Allocator(2))

    def test_infeasible_targets_rejected(self):
        for bad in (F(2, 3), F(9, 10), F(0), F(-1, 2)):
            with pytest.raises(DomainError):
                Greedy3Adversary(bad, 10**4)

    def test_exhausted_budget_is_reported_not_raised(self):
        adversary = Greedy3Adversary(F(1, 10), max_steps=25)
        result = run_adaptive(adversary, Greedy3Allocator(2))
        assert not result.target_reached
        assert result.trace.instance.m <= 25

    def test_padded_agents_see_zero_columns_only(self):
        adversary = Greedy3Adversary(F(1, 2), 10**5, n=3)
        result = run_adaptive(adversary, Greedy3Allocator(3))
        assert result.target_reached
        rows = result.trace.instance.values
        assert all(v == 0 for v in rows[2][3:])  # beyond the opening

    def test_predicted_cycles_bound_dominates_actual(self):
        adversary = Greedy3Adversary(F(1, 2), 10**6)
        bound = adversary.predicted_cycles_bound()
        result = run_adaptive(adversary, Greedy3Allocator(2))
        assert result.cycles <= bound


class TestImpossibilityAdversary:
    def test_constants(self):
        m, k, eps = impossibility_constants(2, F(1, 2))
        assert (m, k) == (8, 6)
        assert eps == F(1, 6**6)

    def test_every_emitted_value_respects_the_unit_bound(self):
        adversary = MivImpossibilityAdversary(3, F(1, 2))
        allocator = MivAllocator(3)
        owners = []
        while (column := adversary.next_column(owners)) is not None:
            assert all(0 <= value <= 1 for value in column)
            owners.append(allocator.observe(column))
        assert len(owners) == adversary.m

    def test_realized_maxima_make_the_all_ones_predictions_perfect(self):
        for allocator_factory in (MivAllocator, Greedy1Allocator, Greedy2Allocator):
            adversary = MivImpossibilityAdversary(2, F(1, 2))
            result = run_adaptive(adversary, allocator_factory(2))
            for row in result.trace.instance.values:
                assert max(row) == 1

    def test_violates_all_three_notions_vs_potential_rule(self):
        adversary = MivImpossibilityAdversary(2, F(1, 2))
        result = run_adaptive(adversary, MivAllocator(2))
        inst, alloc = result.trace.instance, result.trace.allocation
        assert not check_alpha_ef1(inst, alloc, F(1, 2)).satisfied
        assert not check_alpha_mms(inst, alloc, F(1, 2)).satisfied
        assert not check_alpha_propx(inst, alloc, F(1, 2)).satisfied
        assert check_alpha_prop1(inst, alloc, F(1, 2)).satisfied

    def test_case_one_shape_when_agent_one_is_frozen(self):
        # the least-satisfied rule hands agent 1 nothing after the opener,
        # so the schedule runs its full geometric course
        adversary = MivImpossibilityAdversary(2, F(1, 2))
        result = run_adaptive(adversary, Greedy2Allocator(2))
        inst = result.trace.instance
        assert result.trace.owners[0] == 1
        assert result.trace.allocation.bundle(1) == (1,)
        assert inst.values[1][-1] == 1  # the final good realizes agent 2's maximum
        assert not check_alpha_ef1(inst, result.trace.allocation, F(1, 2)).satisfied

    def test_unknown_notion_rejected(self):
        with pytest.raises(DomainError):
            MivImpossibilityAdversary(2, F(1, 2), "efx")

    def test_notion_selection_does_not_change_the_schedule(self):
        traces = []
        for notion in ("ef1", "mms", "propx"):
            adversary = MivImpossibilityAdversary(2, F(1, 3), notion)
            traces.append(run_adaptive(adversary, MivAllocator(2)).trace)
        assert traces[0].instance == traces[1].instance == traces[2].instance
        assert traces[0].owners == traces[1].owners == traces[2].owners
