"""Independent reference interpreter used as a test oracle.

Same documented semantics as the engine, written separately and naively:
plain-dict membranes, brute-force slot assignment via cartesian products,
choice enumeration by explicit count vectors, and sequential phase
application. Slow, simple, and structurally unlike the engine on purpose.
"""

from itertools import product

from mobilemem.core import INF, EndoRule, ExoRule, Fresh, RewriteRule

DELTA_KEY = ("delta", False)


def from_config(config):
    def conv(node):
        objs = {}
        for (sym, t), n in node.content.items():
            objs[(sym.name, sym.is_co, t)] = n
        return {
            "uid": node.uid,
            "label": node.label,
            "timer": node.timer,
            "objs": objs,
            "kids": [conv(c) for c in node.children],
        }

    return conv(config.skin)


def render(node):
    objs = sorted(
        f"{'~' if co else ''}{name}:{'inf' if t == INF else int(t)}"
        for (name, co, t), n in node["objs"].items()
        for _ in range(n)
    )
    kids = sorted(render(c) for c in node["kids"])
    timer = "inf" if node["timer"] == INF else int(node["timer"])
    return f"{node['label']}:{timer}{objs}{kids}"


def walk(node, parent=None):
    yield node, parent
    for child in node["kids"]:
        yield from walk(child, node)


def find_instances(root, rules):
    out = []
    for ridx, rule in enumerate(rules):
        if isinstance(rule, EndoRule):
            for parent, _gp in walk(root):
                for active in parent["kids"]:
                    for passive in parent["kids"]:
                        if active is passive:
                            continue
                        if active["label"] != rule.h or passive["label"] != rule.m:
                            continue
                        if active["kids"] or not active["timer"] > 0 or not passive["timer"] > 0:
                            continue
                        for ab in assignments(rule.active_slots, active["objs"]):
                            for pb in assignments(rule.passive_slots, passive["objs"]):
                                out.append((ridx, active["uid"], passive["uid"], ab, pb))
        elif isinstance(rule, ExoRule):
            for passive, _gp in walk(root):
                if passive["label"] != rule.m or not passive["timer"] > 0:
                    continue
                for active in passive["kids"]:
                    if active["label"] != rule.h or active["kids"] or not active["timer"] > 0:
                        continue
                    for ab in assignments(rule.active_slots, active["objs"]):
                        for pb in assignments(rule.passive_slots, passive["objs"]):
                            out.append((ridx, active["uid"], passive["uid"], ab, pb))
        elif isinstance(rule, RewriteRule):
            for host, _gp in walk(root):
                if rule.at is not None and host["label"] != rule.at:
                    continue
                for ab in assignments(rule.active_slots, host["objs"]):
                    out.append((ridx, host["uid"], None, ab, ()))
    return sorted(set(out))


def assignments(slots, objs):
    """All slot-to-class assignments, brute force then availability check."""
    candidates = []
    for sym in slots:
        classes = [
            (name, co, t)
            for (name, co, t) in objs
            if name == sym.name and co == sym.is_co and t > 0
        ]
        if not classes:
            return []
        candidates.append(classes)
    results = set()
    for combo in product(*candidates):
        need = {}
        for cls in combo:
            need[cls] = need.get(cls, 0) + 1
        if all(objs.get(cls, 0) >= n for cls, n in need.items()):
            results.add(tuple(combo))
    return sorted(results)


def _usage_ok(root, counts, instances, rules):
    need = {}
    actives = []
    passives = set()
    for idx, n in enumerate(counts):
        if not n:
            continue
        ridx, a_uid, p_uid, ab, pb = instances[idx]
        if isinstance(rules[ridx], (EndoRule, ExoRule)):
            if n > 1:
                return None
            actives.extend([a_uid] * n)
            passives.add(p_uid)
        for cls in ab:
            need[(a_uid, cls)] = need.get((a_uid, cls), 0) + n
        for cls in pb:
            need[(p_uid, cls)] = need.get((p_uid, cls), 0) + n
    if len(actives) != len(set(actives)):
        return None
    if set(actives) & passives:
        return None
    by_uid = {node["uid"]: node for node, _p in walk(root)}
    for (uid, cls), n in need.items():
        if by_uid[uid]["objs"].get(cls, 0) < n:
            return None
    return need, set(actives), passives


def choices(root, rules, saturated):
    instances = find_instances(root, rules)
    total_objs = sum(sum(node["objs"].values()) for node, _p in walk(root))
    bounds = []
    for ridx, *_rest in instances:
        bounds.append(1 if isinstance(rules[ridx], (EndoRule, ExoRule)) else total_objs)
    results = []
    for counts in product(*(range(b + 1) for b in bounds)):
        state = _usage_ok(root, counts, instances, rules)
        if state is None:
            continue
        need, actives, passives = state
        legal = True
        for idx, inst in enumerate(instances):
            ridx, a_uid, p_uid, ab, pb = inst
            if not saturated:
                if any(t != INF for (_n, _c, t) in ab + pb):
                    continue
            extra = dict(need)
            for cls in ab:
                extra[(a_uid, cls)] = extra.get((a_uid, cls), 0) + 1
            for cls in pb:
                extra[(p_uid, cls)] = extra.get((p_uid, cls), 0) + 1
            move = isinstance(rules[ridx], (EndoRule, ExoRule))
            if move and (a_uid in actives or a_uid in passives or p_uid in actives):
                continue
            by_uid = {node["uid"]: node for node, _p in walk(root)}
            if all(by_uid[uid]["objs"].get(cls, 0) >= n for (uid, cls), n in extra.items()):
                legal = False
                break
        if legal:
            choice = []
            for idx, n in enumerate(counts):
                choice.extend([instances[idx]] * n)
            results.append(tuple(choice))
    return results


def apply_step(root, choice, rules):
    import copy

    root = copy.deepcopy(root)
    by_uid = {}
    parents = {}
    for node, parent in walk(root):
        by_uid[node["uid"]] = node
        parents[node["uid"]] = parent

    produced = {node_uid: {} for node_uid in by_uid}
    actives = set()
    moves = []

    def give(uid, cls):
        node = by_uid[uid]
        node["objs"][cls] = node["objs"].get(cls, 0) + 1
        produced[uid][cls] = produced[uid].get(cls, 0) + 1

    def take(uid, cls):
        node = by_uid[uid]
        node["objs"][cls] -= 1
        if not node["objs"][cls]:
            del node["objs"][cls]

    for ridx, a_uid, p_uid, ab, pb in choice:
        rule = rules[ridx]
        for cls in ab:
            take(a_uid, cls)
        for cls in pb:
            take(p_uid, cls)
        prods = rule.rhs if isinstance(rule, RewriteRule) else rule.w
        for sym, spec in prods:
            if isinstance(spec, Fresh):
                give(a_uid, (sym.name, sym.is_co, spec.timer))
            else:
                t = ab[spec.slot][2]
                give(a_uid, (sym.name, sym.is_co, INF if t == INF else t - 1))
        if isinstance(rule, (EndoRule, ExoRule)):
            for sym, spec in rule.w2:
                if isinstance(spec, Fresh):
                    give(p_uid, (sym.name, sym.is_co, spec.timer))
                else:
                    t = pb[spec.slot][2]
                    give(p_uid, (sym.name, sym.is_co, INF if t == INF else t - 1))
            actives.add(a_uid)
            if not rule.keep_active_timer and by_uid[a_uid]["timer"] != INF:
                by_uid[a_uid]["timer"] -= 1
            moves.append((type(rule), a_uid, p_uid))

    detached = []
    for kind, a_uid, p_uid in moves:
        active = by_uid[a_uid]
        parents[active["uid"]]["kids"].remove(active)
        if kind is EndoRule:
            by_uid[p_uid]["kids"].append(active)
            parents[a_uid] = by_uid[p_uid]
        else:
            grand = parents[p_uid]
            if grand is None:
                detached.append(active)
            else:
                grand["kids"].append(active)
                parents[a_uid] = grand

    for node, _p in walk(root):
        fresh = {}
        for cls, n in node["objs"].items():
            new = produced[node["uid"]].get(cls, 0)
            old = n - new
            if new:
                fresh[cls] = fresh.get(cls, 0) + new
            if old:
                name, co, t = cls
                if (name, co) == DELTA_KEY:
                    fresh[cls] = fresh.get(cls, 0) + old
                elif t == 0:
                    pass
                elif t == INF:
                    fresh[cls] = fresh.get(cls, 0) + old
                else:
                    fresh[(name, co, t - 1)] = fresh.get((name, co, t - 1), 0) + old
        node["objs"] = fresh

    for node, parent in walk(root):
        if parent is not None and node["uid"] not in actives and node["timer"] == 0:
            node["objs"][(*DELTA_KEY, INF)] = node["objs"].get((*DELTA_KEY, INF), 0) + 1

    def dissolve(node):
        for child in list(node["kids"]):
            dissolve(child)
        marked = [cls for cls in node["objs"] if (cls[0], cls[1]) == DELTA_KEY]
        if not marked:
            return
        for cls in marked:
            del node["objs"][cls]
        parent = next(p for n, p in walk(root) if n is node)
        if parent is None:
            return
        for cls, n in node["objs"].items():
            parent["objs"][cls] = parent["objs"].get(cls, 0) + n
        parent["kids"].extend(node["kids"])
        parent["kids"].remove(node)

    dissolve(root)

    for node, parent in walk(root):
        if parent is None or node["uid"] in actives:
            continue
        if node["timer"] not in (INF, 0):
            node["timer"] -= 1
    return root, detached


def successor_renders(root, rules):
    out = set()
    for choice in choices(root, rules, saturated=False):
        new_root, _det = apply_step(root, choice, rules)
        out.add(render(new_root))
    return out
