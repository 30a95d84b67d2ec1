"""Set-based reference engine.

Walls are Python sets of class ids, exactly as in the set form of the access
condition: grant iff SWG & OWCRC and SWD & OWRC are both empty. It reads the
raw policy fields and shares no code with the bitset engine.
"""

from __future__ import annotations

from datawalls.policy import Policy


class SetEngine:
    def __init__(self, policy: Policy):
        self.classes = set(policy.classes)
        class_of = {}
        for rc in policy.classes.values():
            for r in sorted(rc.roles):
                class_of.setdefault(r, rc.id)

        def lift(x):
            return x if x in self.classes else class_of.get(x)

        self.conflicts = set()
        for a, b in policy.conflicts.pairs:
            ca, cb = lift(a), lift(b)
            if ca and cb and ca != cb:
                self.conflicts.add(frozenset((ca, cb)))

        self.role_of = {}
        for role in policy.roles.values():
            for u in sorted(role.users):
                self.role_of.setdefault(u, role.id)

        self.rights = {
            key: {op.value for op in ops} for key, ops in policy.rights.entries.items()
        }
        self.owrc, self.owcrc = {}, {}
        for obj in policy.objects.values():
            self.owrc[obj.id] = {obj.owning_class}
            self.owcrc[obj.id] = self.rivals(obj.owning_class)
        self.swg, self.swd = {}, {}
        for user, role in self.role_of.items():
            cls = class_of.get(role)
            if cls is None:
                self.swg[user], self.swd[user] = set(), set(self.classes)
            else:
                self.swg[user], self.swd[user] = {cls}, self.rivals(cls)

    def rivals(self, cls):
        return {c for c in self.classes if frozenset((cls, c)) in self.conflicts}

    def step(self, subject, obj, op):
        """Return ``(outcome, reason)`` and update the sets on a grant."""
        if subject not in self.swg or obj not in self.owrc:
            return "Denied", "UnknownPrincipal"
        if self.swg[subject] & self.owcrc[obj] or self.swd[subject] & self.owrc[obj]:
            return "Denied", "WallConflict"
        if op not in self.rights.get((obj, self.role_of[subject]), set()):
            return "Denied", "NoRight"
        if op == "read":
            self.swg[subject] |= self.owrc[obj]
            self.swd[subject] |= self.owcrc[obj]
        else:
            self.owrc[obj] |= self.swg[subject]
            self.owcrc[obj] |= self.swd[subject]
        return "Granted", "Ok"


def bits_to_classes(policy: Policy, vector) -> set[str]:
    by_index = {rc.index: rc.id for rc in policy.classes.values()}
    return {by_index[j] for j in vector.indices()}


def same_final_walls(policy: Policy, state, oracle: SetEngine) -> bool:
    for uid, w in state.subject_walls.items():
        if bits_to_classes(policy, w.granted) != oracle.swg[uid]:
            return False
        if bits_to_classes(policy, w.denied) != oracle.swd[uid]:
            return False
    for oid, w in state.object_walls.items():
        if bits_to_classes(policy, w.authorized) != oracle.owrc[oid]:
            return False
        if bits_to_classes(policy, w.conflicting) != oracle.owcrc[oid]:
            return False
    return True
