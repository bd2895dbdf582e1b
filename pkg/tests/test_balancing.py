import random
from collections import Counter

import pytest

from p2pbalance.application import AppParams, Application, GuestGraph
from p2pbalance.balancing import (
    Batch,
    MigrationOrder,
    Selection,
    Strategy,
    balancing_round,
    dasud_step,
    distance_change,
    edge_cut,
    en_step,
    pm_step,
    select_job,
)
from p2pbalance.errors import ConfigError
from p2pbalance.topology import HostGraph


def star(loads):
    """Host 0 joined to every other host; ``loads[h]`` jobs on host h."""
    g = HostGraph()
    g.add_host()
    for _ in loads[1:]:
        g.add_host([0])
    job = 0
    for h, w in enumerate(loads):
        for _ in range(w):
            g.place(job, h)
            job += 1
    return g


def path(loads):
    g = HostGraph()
    g.add_host()
    for h in range(1, len(loads)):
        g.add_host([h - 1])
    job = 0
    for h, w in enumerate(loads):
        for _ in range(w):
            g.place(job, h)
            job += 1
    return g


def solo_app(m, **params):
    return Application(GuestGraph("none", tuple(() for _ in range(m))), AppParams(**params))


@pytest.mark.parametrize("text", ["en:1", "en:5", "dasud", "pm:0.35", "pm:0", "pm:1"])
def test_strategy_roundtrip(text):
    assert str(Strategy.parse(text)) == text


@pytest.mark.parametrize("text", ["en:0", "en", "pm:1.5", "pm:-0.1", "pm:x", "dasud:2", "greedy"])
def test_strategy_rejects(text):
    with pytest.raises(ConfigError):
        Strategy.parse(text)


def test_selection_parse():
    assert Selection.parse("MinDist") is Selection.MINDIST
    with pytest.raises(ConfigError):
        Selection.parse("random")


def test_en_push_half_the_gap():
    g = star([10, 4, 7])
    assert en_step(g, 0, 1, random.Random(0)) == Batch(0, 1, 3)


def test_en_pull_when_centre_is_minimum():
    g = star([1, 6, 2])
    assert en_step(g, 0, 1, random.Random(0)) == Batch(1, 0, 2)


def test_en_idle_within_one():
    assert en_step(star([2, 1, 2]), 0, 1, random.Random(0)) is None
    assert en_step(star([3, 2, 3]), 0, 1, random.Random(0)) is None


def test_en_radius_sees_farther():
    g = path([5, 4, 1])
    assert en_step(g, 0, 1, random.Random(0)) is None
    assert en_step(g, 0, 2, random.Random(0)) == Batch(0, 2, 2)


def test_dasud_moves_between_extremes():
    g = star([3, 7, 1, 4])
    assert dasud_step(g, 0, random.Random(0)) == Batch(1, 2, 3)
    assert dasud_step(star([2, 1, 2]), 0, random.Random(0)) is None


def test_pm_over_migrates_on_gap_one():
    g = star([2, 1, 2])
    assert pm_step(g, 0, 1.0, random.Random(0)) == Batch(0, 1, 1)
    assert pm_step(g, 0, 0.0, random.Random(0)) is None


def test_pm_ignores_equal_neighbours():
    assert pm_step(star([2, 2, 2]), 0, 1.0, random.Random(0)) is None


def test_pm_zero_consumes_no_randomness():
    g = star([2, 1, 2])
    rng = random.Random(4)
    before = rng.getstate()
    pm_step(g, 0, 0.0, rng)
    assert rng.getstate() == before


def test_pm_falls_back_to_en():
    g = star([10, 4, 7])
    assert pm_step(g, 0, 0.5, random.Random(0)) == Batch(0, 1, 3)


def test_inflight_job_counts_for_destination():
    g = star([3, 0, 3])
    g.depart(0, 1)
    g.depart(1, 1)
    # committed loads are 1, 2, 3: host 1 is owed two jobs and does not pull
    assert en_step(g, 1, 1, random.Random(0)) is None
    assert en_step(g, 0, 1, random.Random(0)) == Batch(2, 0, 1)
    # host 1 sees itself one above host 0, but holds nothing it could send
    assert pm_step(g, 1, 1.0, random.Random(0)) == Batch(1, 0, 1)
    app = solo_app(6)
    orders = balancing_round(g, app, Strategy("pm", p=1.0), Selection.NONE, 0, random.Random(0), Counter())
    assert all(o.source != 1 for o in orders)


def test_edge_cut_and_distance_scores():
    hosts = path([0, 0, 0])
    guest = GuestGraph("custom", ((1,), (0, 2), (1,)))
    app = Application(guest, AppParams())
    hosts.place(0, 0)
    hosts.place(1, 1)
    hosts.place(2, 2)
    assert edge_cut(app, hosts, 0, 1) == 0
    assert edge_cut(app, hosts, 1, 0) == 1
    assert edge_cut(app, hosts, 1, 2) == 1
    assert edge_cut(app, hosts, 0, 2) == 1
    assert distance_change(app, hosts, 0, 1) == -1
    assert distance_change(app, hosts, 2, 1) == -1
    assert distance_change(app, hosts, 2, 0) == 0


def test_select_job_prefers_best_score():
    hosts = path([0, 0, 0])
    # jobs 0 and 1 live on host 0; only job 1 has a neighbour (job 2, on host 2)
    guest = GuestGraph("custom", ((), (2,), (1,)))
    app = Application(guest, AppParams())
    hosts.place(0, 0)
    hosts.place(1, 0)
    hosts.place(2, 2)
    rng = random.Random(0)
    assert select_job(Selection.MINDIST, 0, 1, hosts, app, rng) == 1
    assert select_job(Selection.EDGECUT, 0, 1, hosts, app, rng) in (0, 1)
    assert select_job(Selection.NONE, 0, 1, hosts, app, rng, exclude={0}) == 1
    assert select_job(Selection.NONE, 0, 1, hosts, app, rng, exclude={0, 1}) is None


def test_round_never_moves_a_job_twice():
    hosts = path([6, 0, 0, 0, 0, 0])
    app = solo_app(6)
    orders = balancing_round(hosts, app, Strategy("en", radius=1), Selection.NONE, 0, random.Random(2), Counter())
    jobs = [o.job for o in orders]
    assert len(jobs) == len(set(jobs))
    hosts.check_conservation(6)


def test_round_counts_migrations_at_source():
    hosts = star([10, 4, 7])
    app = solo_app(21)
    counter = Counter()
    orders = balancing_round(hosts, app, Strategy("dasud"), Selection.NONE, 7, random.Random(1), counter)
    assert sum(counter.values()) == len(orders)
    assert all(isinstance(o, MigrationOrder) and o.issued_at == 7 for o in orders)
    for o in orders:
        assert counter[o.source] >= 1
    hosts.check_conservation(21)


def test_order_log_line():
    assert str(MigrationOrder(4, 1, 2, 30)) == "30 4 1 2"


def test_balanced_state_is_fixpoint():
    hosts = star([2, 2, 2, 2])
    app = solo_app(8)
    for s in (Strategy("en", radius=3), Strategy("dasud"), Strategy("pm", p=1.0)):
        assert balancing_round(hosts, app, s, Selection.NONE, 0, random.Random(0), Counter()) == []
