import random
import threading
from datetime import datetime, timezone

import pytest

from gen import random_policy, random_trace
from oracle import SetEngine, same_final_walls
from datawalls.checkpoint import (
    AccessRequest,
    Checkpoint,
    Outcome,
    Reason,
    apply,
    authorize,
    replay,
)
from datawalls.errors import StaleDecision
from datawalls.store.state import EngineState

EPOCH = datetime(2022, 12, 12, tzinfo=timezone.utc)


class ListSink:
    def __init__(self):
        self.records = []

    def append(self, record):
        self.records.append(record)
        return self


def fixed_clock():
    return EPOCH


def req(seq, s, o, op):
    return AccessRequest(seq, s, o, op)


class TestCaseStudyQueries:
    def test_q1_write_is_granted_and_walls_stay(self, case_state):
        d = authorize(case_state, req(1, "S1", "ODW", "write"))
        assert (d.outcome, d.reason) == (Outcome.GRANTED, Reason.OK)
        after = apply(case_state, d)
        assert after.same_walls(case_state)
        assert after.version == case_state.version + 1

    def test_q2_read_is_denied_by_the_wall(self, case_state):
        d = authorize(case_state, req(2, "S3", "DDW", "read"))
        assert (d.outcome, d.reason) == (Outcome.DENIED, Reason.WALL_CONFLICT)
        assert d.wire() == "2 DENIED WallConflict"
        assert d.summary() == "Denied (WallConflict)"

    def test_replay_of_both(self, case_state):
        decisions, _ = replay(case_state, [req(1, "S1", "ODW", "write"), req(2, "S3", "DDW", "read")])
        assert [d.summary() for d in decisions] == ["Granted", "Denied (WallConflict)"]


class TestReasons:
    def test_unsupported_operation(self, case_state):
        d = authorize(case_state, req(1, "S1", "ODW", "delete"))
        assert d.reason is Reason.NO_RIGHT

    def test_missing_right_behind_open_wall(self, case_state):
        # S2 (R5) holds only read on DDW
        assert authorize(case_state, req(1, "S2", "DDW", "read")).granted
        assert authorize(case_state, req(1, "S2", "DDW", "write")).reason is Reason.NO_RIGHT

    def test_wall_is_checked_before_rights(self, case_state):
        # S3 has no right on DDW either, but the wall answers first
        assert case_state.policy.rights.get("DDW", "R6") == frozenset()
        assert authorize(case_state, req(1, "S3", "DDW", "write")).reason is Reason.WALL_CONFLICT

    def test_unknown_subject_and_object(self, case_state):
        for s, o in [("S9", "ODW"), ("S1", "XDW")]:
            d = authorize(case_state, req(1, s, o, "read"))
            assert (d.outcome, d.reason) == (Outcome.DENIED, Reason.UNKNOWN_PRINCIPAL)

    def test_classless_user_is_walled_off(self, case_state):
        state = case_state.assign_user("u", "R7")
        d = authorize(state, req(1, "u", "ODW", "read"))
        assert d.reason is Reason.WALL_CONFLICT


class TestApply:
    def test_authorize_is_pure(self, case_state):
        before = case_state
        authorize(case_state, req(1, "S1", "ODW", "write"))
        assert case_state is before and case_state.version == 0

    def test_stale_decision(self, case_state):
        first = authorize(case_state, req(1, "S1", "ODW", "write"))
        second = authorize(case_state, req(2, "S2", "DDW", "read"))
        state = apply(case_state, first)
        with pytest.raises(StaleDecision):
            apply(state, second)

    def test_denial_changes_nothing_but_the_log(self, case_state):
        sink = ListSink()
        d = authorize(case_state, req(2, "S3", "DDW", "read"))
        after = apply(case_state, d, sink, fixed_clock)
        assert after is case_state
        assert len(sink.records) == 1
        assert sink.records[0].decision is d and sink.records[0].timestamp == EPOCH

    def test_grant_is_audited_with_walls(self, case_state):
        sink = ListSink()
        d = authorize(case_state, req(1, "S2", "DDW", "read"))
        apply(case_state, d, sink)
        rec = sink.records[0].decision
        assert str(rec.pre_subject) == "S2 {010, 101}" == str(rec.post_subject)


class TestReplay:
    def test_empty_trace(self, case_state):
        decisions, state = replay(case_state, [])
        assert decisions == [] and state is case_state

    def test_sequence_numbers_must_increase(self, case_state):
        with pytest.raises(ValueError):
            replay(case_state, [req(2, "S1", "ODW", "read"), req(2, "S1", "ODW", "read")])

    def test_deterministic(self):
        rng = random.Random(11)
        policy = random_policy(rng, n_classes=4)
        trace = random_trace(rng, policy, 300)
        runs = [replay(EngineState.initial(policy), trace, clock=fixed_clock) for _ in range(2)]
        assert [d.wire() for d in runs[0][0]] == [d.wire() for d in runs[1][0]]
        assert runs[0][1] == runs[1][1]

    def test_audit_gets_one_record_per_request(self):
        rng = random.Random(12)
        policy = random_policy(rng)
        trace = random_trace(rng, policy, 250)
        sink = ListSink()
        decisions, state = replay(EngineState.initial(policy), trace, sink)
        assert len(sink.records) == len(trace) == len(decisions)
        assert state.version == sum(d.granted for d in decisions)

    def test_long_trace_matches_set_oracle(self):
        rng = random.Random(20221212)
        policy = random_policy(rng, n_classes=4, n_roles=10, n_objects=6)
        trace = random_trace(rng, policy, 1000)
        oracle = SetEngine(policy)
        decisions, state = replay(EngineState.initial(policy), trace)
        for r, d in zip(trace, decisions):
            assert (d.outcome.value, d.reason.value) == oracle.step(r.subject, r.object, r.operation), r
        assert same_final_walls(policy, state, oracle)


def test_concurrent_submissions_are_serialized():
    rng = random.Random(5)
    policy = random_policy(rng, n_classes=3)
    trace = random_trace(rng, policy, 400)
    sink = ListSink()
    cp = Checkpoint(EngineState.initial(policy), sink)
    results = []
    lock = threading.Lock()

    def worker(chunk):
        for r in chunk:
            d = cp.submit(r)
            with lock:
                results.append(d)

    threads = [threading.Thread(target=worker, args=(trace[i::4],)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(sink.records) == len(trace)
    assert cp.state.version == sum(d.granted for d in results)
    # every decision was made against the version current at its turn
    versions = [rec.decision.version for rec in sink.records]
    assert versions == sorted(versions)


def test_switch_role_restarts_the_subject_wall(case_policy):
    import dataclasses

    from datawalls.policy import AccessRights, ConflictRelation, Operation

    rights = {**case_policy.rights.entries, ("ADW", "R3"): frozenset({Operation.READ})}
    policy = dataclasses.replace(
        case_policy, conflicts=ConflictRelation((("DAC", "DSC"),)), rights=AccessRights(rights)
    )
    state = EngineState.initial(policy).assign_user("u", "R3")
    state = apply(state, authorize(state, req(1, "u", "ADW", "read")))
    assert str(state.subject_walls["u"]) == "u {101, 010}"
    switched = state.switch_role("u", "R2")
    assert str(switched.subject_walls["u"]) == "u {100, 000}"
    assert switched.version == state.version + 1
