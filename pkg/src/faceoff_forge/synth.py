"""Seeded synthetic seasons with known parameters, plus their exact expectations.

Generative process for one face-off:

1. taker A is drawn in proportion to player weight; opponent B in proportion
   to weight among players on other teams;
2. a dot is drawn from `dot_weights` (home-relative ids), A's team is home
   with probability 1/2, and the home attack sign is +1 or -1 with
   probability 1/2;
3. A wins with the log5 combination of A's and B's win probabilities for
   their own (zone, deployment) cells (center draws use `center_win_prob`);
4. the winner picks a direction from `dir_dist[deployment]`, the win is
   clean with probability `clean_prob`;
5. the winner's team produces an event with `event_prob[(zone, direction,
   clean)]`; the loser's team, when it gains the puck, produces one with
   `loss_event_prob[zone]`.

`analytic_baselines` and `analytic_ee` compute what the estimators converge
to under exactly this process.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .aggregate import ALL_EXPECTED_KEYS, CategoryKey, ExpectedKey, LeagueBaselines
from .ingest import (
    EventKind,
    ExternalPlayerMetrics,
    FaceoffRecord,
    FirstTouch,
    SequenceEvent,
    TouchKind,
)
from .rink import (
    DEFAULT_RINK,
    DOT_IDS,
    Deployment,
    DirectionSector,
    Handedness,
    RinkSpec,
    Side,
    ZoneSection,
)

ZONES = list(ZoneSection)          # OZ, DZ, NZN, NZS: index ^ 1 flips the zone
DEPS = list(Deployment)            # STRONG, WEAK
DIRS = list(DirectionSector)       # counter-clockwise from forward, 45 degrees apart
SIDES = [Side.LEFT, Side.RIGHT]

# (zone index, boards side index) of each dot for the home team; center is None
_HOME_LABELS: Dict[str, Optional[Tuple[int, int]]] = {
    "C": None,
    "NZL_N": (2, 0), "NZR_N": (2, 1), "NZL_S": (3, 0), "NZR_S": (3, 1),
    "OZL": (0, 0), "OZR": (0, 1), "DZL": (1, 0), "DZR": (1, 1),
}

DEFAULT_CENTER_SHARE = 0.173

# Win-direction mixes loosely shaped like the league breakdown by deployment.
_BASE_DIR = {
    Deployment.STRONG: (1.7, 1.7, 4.1, 13.7, 33.9, 32.4, 10.3, 2.3),
    Deployment.WEAK: (2.3, 3.1, 9.4, 24.9, 25.0, 22.9, 8.6, 2.3),
}
# Event chances after a win, per zone, by direction.
_BASE_EVENT = {
    ZoneSection.OFFENSIVE: (0.02, 0.02, 0.13, 0.30, 0.34, 0.31, 0.14, 0.03),
    ZoneSection.DEFENSIVE: (0.05, 0.16, 0.37, 0.46, 0.42, 0.37, 0.23, 0.05),
    ZoneSection.NEUTRAL_NORTH: (0.03, 0.07, 0.46, 0.72, 0.70, 0.77, 0.37, 0.05),
    ZoneSection.NEUTRAL_SOUTH: (0.02, 0.05, 0.20, 0.41, 0.43, 0.38, 0.16, 0.02),
}


class InvalidParams(ValueError):
    pass


def _zd_key(z: ZoneSection, s: Deployment) -> str:
    return f"{z.value}|{s.value}"


@dataclass
class SynthPlayerParams:
    player_id: str
    team: str
    hand: Handedness
    win_prob: Dict[Tuple[ZoneSection, Deployment], float]
    dir_dist: Dict[Deployment, Tuple[float, ...]]
    clean_prob: float
    center_win_prob: float = 0.5
    weight: float = 1.0

    def validate(self) -> None:
        if set(self.win_prob) != {(z, s) for z in ZONES for s in DEPS}:
            raise InvalidParams(f"{self.player_id}: win_prob needs every (zone, deployment)")
        for p in list(self.win_prob.values()) + [self.clean_prob, self.center_win_prob]:
            if not 0 < p < 1:
                raise InvalidParams(f"{self.player_id}: probabilities must lie in (0, 1)")
        for s in DEPS:
            dist = self.dir_dist.get(s)
            if dist is None or len(dist) != 8:
                raise InvalidParams(f"{self.player_id}: dir_dist[{s.value}] must have 8 entries")
            if any(p <= 0 or p >= 1 for p in dist) or abs(math.fsum(dist) - 1.0) > 1e-9:
                raise InvalidParams(f"{self.player_id}: dir_dist[{s.value}] must be positive and sum to 1")
        if not self.weight > 0:
            raise InvalidParams(f"{self.player_id}: weight must be positive")

    def to_dict(self) -> dict:
        return {
            "player_id": self.player_id,
            "team": self.team,
            "hand": self.hand.value,
            "win_prob": {_zd_key(z, s): p for (z, s), p in self.win_prob.items()},
            "dir_dist": {s.value: list(d) for s, d in self.dir_dist.items()},
            "clean_prob": self.clean_prob,
            "center_win_prob": self.center_win_prob,
            "weight": self.weight,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthPlayerParams":
        win = {}
        for k, p in d["win_prob"].items():
            z, s = k.split("|")
            win[(ZoneSection(z), Deployment(s))] = float(p)
        return cls(
            player_id=str(d["player_id"]),
            team=str(d["team"]),
            hand=Handedness(d["hand"]),
            win_prob=win,
            dir_dist={Deployment(s): tuple(float(x) for x in v) for s, v in d["dir_dist"].items()},
            clean_prob=float(d["clean_prob"]),
            center_win_prob=float(d.get("center_win_prob", 0.5)),
            weight=float(d.get("weight", 1.0)),
        )


@dataclass
class SynthEventParams:
    event_prob: Dict[Tuple[ZoneSection, DirectionSector, bool], float]
    loss_event_prob: Dict[ZoneSection, float]
    center_event_prob: float = 0.3
    # (direction, clean) -> (mean seconds, standard deviation)
    elapsed: Dict[Tuple[DirectionSector, bool], Tuple[float, float]] = field(default_factory=dict)
    center_elapsed: Tuple[float, float] = (1.8, 0.6)
    possession_change_prob: float = 0.5

    def validate(self) -> None:
        if set(self.event_prob) != {(z, d, c) for z in ZONES for d in DIRS for c in (False, True)}:
            raise InvalidParams("event_prob needs every (zone, direction, clean)")
        if set(self.loss_event_prob) != set(ZONES):
            raise InvalidParams("loss_event_prob needs every zone")
        probs = list(self.event_prob.values()) + list(self.loss_event_prob.values())
        probs += [self.center_event_prob, self.possession_change_prob]
        if any(not 0 <= p <= 1 for p in probs):
            raise InvalidParams("event probabilities must lie in [0, 1]")
        if set(self.elapsed) != {(d, c) for d in DIRS for c in (False, True)}:
            raise InvalidParams("elapsed needs every (direction, clean)")
        for mean, sd in list(self.elapsed.values()) + [self.center_elapsed]:
            if not (mean > 0 and sd > 0):
                raise InvalidParams("elapsed means and spreads must be positive")

    def to_dict(self) -> dict:
        return {
            "event_prob": {f"{z.value}|{d.value}|{str(c).lower()}": p for (z, d, c), p in self.event_prob.items()},
            "loss_event_prob": {z.value: p for z, p in self.loss_event_prob.items()},
            "center_event_prob": self.center_event_prob,
            "elapsed": {f"{d.value}|{str(c).lower()}": list(v) for (d, c), v in self.elapsed.items()},
            "center_elapsed": list(self.center_elapsed),
            "possession_change_prob": self.possession_change_prob,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthEventParams":
        ev = {}
        for k, p in d["event_prob"].items():
            z, dr, c = k.split("|")
            ev[(ZoneSection(z), DirectionSector(dr), c == "true")] = float(p)
        el = {}
        for k, v in d["elapsed"].items():
            dr, c = k.split("|")
            el[(DirectionSector(dr), c == "true")] = (float(v[0]), float(v[1]))
        return cls(
            event_prob=ev,
            loss_event_prob={ZoneSection(z): float(p) for z, p in d["loss_event_prob"].items()},
            center_event_prob=float(d.get("center_event_prob", 0.3)),
            elapsed=el,
            center_elapsed=tuple(d.get("center_elapsed", (1.8, 0.6))),
            possession_change_prob=float(d.get("possession_change_prob", 0.5)),
        )


@dataclass
class SynthParams:
    players: List[SynthPlayerParams]
    events: SynthEventParams
    dot_weights: Dict[str, float]
    touch_distance_ft: Tuple[float, float] = (5.0, 20.0)

    def validate(self) -> None:
        if len(self.players) < 2:
            raise InvalidParams("need at least two players")
        ids = [p.player_id for p in self.players]
        if len(set(ids)) != len(ids):
            raise InvalidParams("duplicate player ids")
        if len({p.team for p in self.players}) < 2:
            raise InvalidParams("need players on at least two teams")
        for p in self.players:
            p.validate()
        self.events.validate()
        if set(self.dot_weights) != set(DOT_IDS) or any(w < 0 for w in self.dot_weights.values()):
            raise InvalidParams(f"dot_weights needs non-negative weights for {DOT_IDS}")
        if not sum(self.dot_weights.values()) > 0:
            raise InvalidParams("dot_weights must not all be zero")
        lo, hi = self.touch_distance_ft
        if not 0 < lo <= hi:
            raise InvalidParams("touch_distance_ft must satisfy 0 < lo <= hi")

    def player(self, player_id: str) -> SynthPlayerParams:
        for p in self.players:
            if p.player_id == player_id:
                return p
        raise KeyError(player_id)

    def to_dict(self) -> dict:
        return {
            "players": [p.to_dict() for p in self.players],
            "events": self.events.to_dict(),
            "dot_weights": dict(self.dot_weights),
            "touch_distance_ft": list(self.touch_distance_ft),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SynthParams":
        params = cls(
            players=[SynthPlayerParams.from_dict(p) for p in d["players"]],
            events=SynthEventParams.from_dict(d["events"]),
            dot_weights={k: float(v) for k, v in d["dot_weights"].items()},
            touch_distance_ft=tuple(d.get("touch_distance_ft", (5.0, 20.0))),
        )
        params.validate()
        return params

    @classmethod
    def load(cls, path: str) -> "SynthParams":
        with open(path, encoding="utf-8") as fh:
            try:
                return cls.from_dict(json.load(fh))
            except (KeyError, TypeError, ValueError) as exc:
                if isinstance(exc, InvalidParams):
                    raise
                raise InvalidParams(f"{path}: {exc}") from exc


def default_dot_weights(center_share: float = DEFAULT_CENTER_SHARE) -> Dict[str, float]:
    rest = (1.0 - center_share) / 8
    return {d: (center_share if d == "C" else rest) for d in DOT_IDS}


def _default_elapsed() -> Dict[Tuple[DirectionSector, bool], Tuple[float, float]]:
    # clean wins land on a stick ~25% quicker; backward-outside beats backward-inside
    factor = dict(zip(DIRS, (1.10, 1.05, 1.00, 1.00, 0.92, 0.84, 0.90, 1.05)))
    return {(d, c): ((1.5 if c else 2.0) * factor[d], 0.5) for d in DIRS for c in (False, True)}


def random_params(
    n_players: int = 60,
    n_teams: int = 15,
    seed: int = 0,
    center_share: float = DEFAULT_CENTER_SHARE,
    concentration: float = 40.0,
) -> SynthParams:
    """Random but plausible league parameters."""
    if n_teams < 2 or n_players < n_teams:
        raise InvalidParams("need at least two teams and one player per team")
    rng = np.random.default_rng(seed)
    players = []
    for k in range(n_players):
        dir_dist = {}
        for s in DEPS:
            base = np.asarray(_BASE_DIR[s]) / 100.0
            draw = rng.dirichlet(base / base.sum() * concentration)
            draw = np.clip(draw, 1e-4, None)
            draw = draw / draw.sum()
            dir_dist[s] = tuple(float(x) for x in draw)
            # exact renormalisation so the tuple sums to 1 within 1e-9
            dir_dist[s] = tuple(x / math.fsum(dir_dist[s]) for x in dir_dist[s])
        skill = rng.normal(0.0, 0.04)
        win = {}
        for z in ZONES:
            win[(z, Deployment.STRONG)] = float(np.clip(0.53 + skill + rng.normal(0, 0.02), 0.05, 0.95))
            win[(z, Deployment.WEAK)] = float(np.clip(0.47 + skill + rng.normal(0, 0.02), 0.05, 0.95))
        players.append(SynthPlayerParams(
            player_id=f"P{k + 1:03d}",
            team=f"T{k % n_teams + 1:02d}",
            hand=Side.LEFT if rng.random() < 0.6 else Side.RIGHT,
            win_prob=win,
            dir_dist=dir_dist,
            clean_prob=float(np.clip(rng.normal(0.445, 0.06), 0.05, 0.95)),
            center_win_prob=float(np.clip(0.5 + skill, 0.05, 0.95)),
            weight=float(rng.uniform(0.5, 1.5)),
        ))
    event_prob = {}
    for z in ZONES:
        for i, d in enumerate(DIRS):
            base = _BASE_EVENT[z][i] + rng.normal(0, 0.02)
            for c in (False, True):
                event_prob[(z, d, c)] = float(np.clip(base + (0.04 if c else -0.04), 0.0, 1.0))
    loss = {z: float(rng.uniform(0.03, 0.12)) for z in ZONES}
    params = SynthParams(
        players=players,
        events=SynthEventParams(event_prob=event_prob, loss_event_prob=loss, elapsed=_default_elapsed()),
        dot_weights=default_dot_weights(center_share),
    )
    params.validate()
    return params


# ---------------------------------------------------------------- generation

def _log5(a, b):
    return a * (1 - b) / (a * (1 - b) + b * (1 - a))


@dataclass
class _Arrays:
    win: np.ndarray          # (P, zone, dep)
    center_win: np.ndarray   # (P,)
    dir_cum: np.ndarray      # (P, dep, 8)
    clean: np.ndarray        # (P,)
    hand: np.ndarray         # (P,) 0 = L, 1 = R
    event: np.ndarray        # (zone, dir, clean)
    loss: np.ndarray         # (zone,)
    el_mean: np.ndarray      # (dir, clean)
    el_sd: np.ndarray


def _arrays(params: SynthParams) -> _Arrays:
    players = params.players
    ev = params.events
    win = np.array([[[p.win_prob[(z, s)] for s in DEPS] for z in ZONES] for p in players])
    dir_cum = np.cumsum(np.array([[p.dir_dist[s] for s in DEPS] for p in players]), axis=2)
    dir_cum[:, :, -1] = 1.0
    return _Arrays(
        win=win,
        center_win=np.array([p.center_win_prob for p in players]),
        dir_cum=dir_cum,
        clean=np.array([p.clean_prob for p in players]),
        hand=np.array([0 if p.hand is Side.LEFT else 1 for p in players]),
        event=np.array([[[ev.event_prob[(z, d, c)] for c in (False, True)] for d in DIRS] for z in ZONES]),
        loss=np.array([ev.loss_event_prob[z] for z in ZONES]),
        el_mean=np.array([[ev.elapsed[(d, c)][0] for c in (False, True)] for d in DIRS]),
        el_sd=np.array([[ev.elapsed[(d, c)][1] for c in (False, True)] for d in DIRS]),
    )


def _opponent_tables(params: SynthParams):
    teams = [p.team for p in params.players]
    w = np.array([p.weight for p in params.players])
    tables = {}
    for t in set(teams):
        mask = np.array([tm != t for tm in teams])
        probs = np.where(mask, w, 0.0)
        tables[t] = probs / probs.sum()
    return tables


def generate_season(params: SynthParams, n_faceoffs: int, seed: int, rink: RinkSpec = DEFAULT_RINK) -> List[FaceoffRecord]:
    """Draw `n_faceoffs` records; the same seed always yields the same records."""
    if n_faceoffs <= 0:
        raise InvalidParams("n_faceoffs must be positive")
    params.validate()
    rng = np.random.default_rng(seed)
    arr = _arrays(params)
    players = params.players
    n_p = len(players)
    n = n_faceoffs

    w = np.array([p.weight for p in players])
    a_idx = rng.choice(n_p, size=n, p=w / w.sum())
    b_idx = np.empty(n, dtype=np.int64)
    opp = _opponent_tables(params)
    team_names = sorted(opp)
    a_team = np.array([team_names.index(p.team) for p in players])[a_idx]
    for ti, t in enumerate(team_names):
        rows = np.flatnonzero(a_team == ti)
        if len(rows):
            b_idx[rows] = rng.choice(n_p, size=len(rows), p=opp[t])

    dot_w = np.array([params.dot_weights[d] for d in DOT_IDS])
    dot_idx = rng.choice(len(DOT_IDS), size=n, p=dot_w / dot_w.sum())
    a_home = rng.random(n) < 0.5
    home_sign = np.where(rng.random(n) < 0.5, 1, -1)

    zone_home = np.array([(-1 if _HOME_LABELS[d] is None else _HOME_LABELS[d][0]) for d in DOT_IDS])[dot_idx]
    side_home = np.array([(-1 if _HOME_LABELS[d] is None else _HOME_LABELS[d][1]) for d in DOT_IDS])[dot_idx]
    center = zone_home < 0
    z_a = np.where(center, -1, np.where(a_home, zone_home, zone_home ^ 1))
    s_a = np.where(center, -1, np.where(a_home, side_home, side_home ^ 1))
    z_b = np.where(center, -1, z_a ^ 1)
    s_b = np.where(center, -1, s_a ^ 1)
    dep_a = np.where(arr.hand[a_idx] == s_a, 0, 1)
    dep_b = np.where(arr.hand[b_idx] == s_b, 0, 1)

    zc_a, zc_b = np.maximum(z_a, 0), np.maximum(z_b, 0)
    p_a = np.where(
        center,
        _log5(arr.center_win[a_idx], arr.center_win[b_idx]),
        _log5(arr.win[a_idx, zc_a, dep_a], arr.win[b_idx, zc_b, dep_b]),
    )
    a_wins = rng.random(n) < p_a
    win_i = np.where(a_wins, a_idx, b_idx)
    lose_i = np.where(a_wins, b_idx, a_idx)
    z_w = np.where(a_wins, z_a, z_b)
    z_l = np.where(a_wins, z_b, z_a)
    dep_w = np.where(a_wins, dep_a, dep_b)

    u_dir = rng.random(n)
    direction = (u_dir[:, None] > arr.dir_cum[win_i, dep_w]).sum(axis=1)
    direction = np.minimum(direction, 7)
    clean = rng.random(n) < arr.clean[win_i]
    zc_w = np.maximum(z_w, 0)
    p_event = np.where(center, params.events.center_event_prob, arr.event[zc_w, direction, clean.astype(int)])
    w_event = rng.random(n) < p_event
    p_loss = np.where(center, params.events.center_event_prob, arr.loss[np.maximum(z_l, 0)])
    l_event = rng.random(n) < p_loss
    change = l_event | (rng.random(n) < params.events.possession_change_prob)

    # geometry: angle inside the sector (kept off the exact boundaries), distance in range
    eps = 1e-6
    offset = rng.uniform(-22.5 + eps, 22.5 - eps, size=n)
    theta = np.where(center, rng.uniform(-180.0, 180.0, size=n), direction * 45.0 + offset)
    lo, hi = params.touch_distance_ft
    radius = rng.uniform(lo, hi, size=n)

    mean = np.where(center, params.events.center_elapsed[0], arr.el_mean[direction, clean.astype(int)])
    sd = np.where(center, params.events.center_elapsed[1], arr.el_sd[direction, clean.astype(int)])
    elapsed = rng.gamma((mean / sd) ** 2, sd ** 2 / mean)

    # pre-drop stance of the receiver: close for clean wins, further otherwise
    receipt_kind = np.where(clean, 0, np.where(rng.random(n) < 0.8, 1, 0))  # 0 Reception, 1 Recovery
    moved = np.where(clean, rng.uniform(0.0, 4.0, size=n), rng.uniform(6.0, 15.0, size=n))
    period = rng.integers(1, 4, size=n)
    drop = rng.uniform(0.0, 1150.0, size=n)
    gaps = rng.uniform(0.5, 4.0, size=(n, 5))
    decoy = rng.random((n, 2)) < 0.2
    helper = rng.integers(1, 5, size=n)

    records: List[FaceoffRecord] = []
    dots = [rink.dot_positions[d] for d in DOT_IDS]
    for k in range(n):
        A, B = players[a_idx[k]], players[b_idx[k]]
        W, L = players[win_i[k]], players[lose_i[k]]
        home = A if a_home[k] else B
        hs = int(home_sign[k])
        dot_id = DOT_IDS[dot_idx[k]]
        dx, dy = dots[dot_idx[k]]
        dot = (hs * dx, hs * dy)
        w_sign = hs if W.team == home.team else -hs
        l_sign = -w_sign
        th = math.radians(theta[k])
        r = radius[k]
        u, v = r * math.cos(th), r * math.sin(th)
        inside_y = 1.0 if dot[1] <= 0 else -1.0
        touch_loc = (dot[0] + u * w_sign, dot[1] + v * inside_y)
        norm = math.hypot(*touch_loc)
        m = min(moved[k], norm)
        predrop = (touch_loc[0] - m * touch_loc[0] / norm, touch_loc[1] - m * touch_loc[1] / norm) if norm else touch_loc

        t0 = float(drop[k])
        t_touch = t0 + float(elapsed[k])
        touch = FirstTouch(
            kind=TouchKind.RECEPTION if receipt_kind[k] == 0 else TouchKind.RECOVERY,
            time=t_touch,
            location=touch_loc,
            player=f"{W.team}-S{helper[k]}",
            player_team=W.team,
            player_predrop_location=predrop,
        )

        seq: List[SequenceEvent] = []
        t = t_touch
        g = gaps[k]
        if decoy[k, 0]:
            t += 0.5 * g[0]
            seq.append(SequenceEvent(EventKind.SHOT_ATTEMPT, t, (w_sign * 40.0, 30.0), W.team))
        if w_event[k]:
            t += g[1]
            seq.append(_event_for(int(z_w[k]), w_sign, W.team, t))
        if change[k]:
            t += g[2]
            seq.append(SequenceEvent(EventKind.POSSESSION_CHANGE, t, (0.0, 0.0), L.team))
            if l_event[k]:
                t += g[3]
                seq.append(_event_for(int(z_l[k]), l_sign, L.team, t))
        t += g[4]
        seq.append(SequenceEvent(EventKind.STOPPAGE, t, None, W.team))
        if decoy[k, 1]:
            seq.append(SequenceEvent(EventKind.SHOT_ON_NET, t + 1.0, (w_sign * 80.0, 0.0), W.team))

        records.append(FaceoffRecord(
            game_id=f"S{seed}-G{k // 70:05d}",
            faceoff_id=f"S{seed}-F{k:07d}",
            period=int(period[k]),
            drop_time=t0,
            dot_id=dot_id,
            home_attack_sign=hs,
            home_team=home.team,
            winner_team=W.team,
            winner_player=W.player_id,
            loser_player=L.player_id,
            winner_hand=W.hand,
            loser_hand=L.hand,
            first_touch=touch,
            sequence=tuple(seq),
        ))
    return records


def _event_for(zone_idx: int, sign: int, team: str, t: float) -> SequenceEvent:
    """One counted event for a team in the given perspective zone (-1 = center)."""
    if zone_idx == 0:
        return SequenceEvent(EventKind.SHOT_ON_NET, t, (sign * 78.0, 3.0), team)
    if zone_idx in (1, 3):
        return SequenceEvent(EventKind.ZONE_EXIT, t, (-sign * 25.0, 10.0), team)
    return SequenceEvent(EventKind.ZONE_ENTRY, t, (sign * 25.0, -10.0), team)


# ---------------------------------------------------------------- analytic oracles

@dataclass
class _Masses:
    # expected winner-row mass per (player, zone, dep): P(player wins there)
    win: Dict[Tuple[str, int, int], float]
    # expected loser-row mass per (player, zone, dep, clean)
    loss: Dict[Tuple[str, int, int, bool], float]
    # expected non-center face-offs per player
    taken: Dict[str, float]


def _masses(params: SynthParams) -> _Masses:
    params.validate()
    players = params.players
    W = sum(p.weight for p in players)
    dot_total = sum(params.dot_weights.values())
    win: Dict[Tuple[str, int, int], float] = {}
    loss: Dict[Tuple[str, int, int, bool], float] = {}
    taken: Dict[str, float] = {p.player_id: 0.0 for p in players}
    hand_idx = {p.player_id: SIDES.index(p.hand) for p in players}

    for A in players:
        others = [B for B in players if B.team != A.team]
        w_others = sum(B.weight for B in others)
        for B in others:
            pair = A.weight / W * B.weight / w_others
            for dot_id, q in params.dot_weights.items():
                label = _HOME_LABELS[dot_id]
                if label is None or q == 0:
                    continue
                for a_home in (True, False):
                    m = pair * q / dot_total * 0.5
                    za, sa = label if a_home else (label[0] ^ 1, label[1] ^ 1)
                    zb, sb = za ^ 1, sa ^ 1
                    da = 0 if hand_idx[A.player_id] == sa else 1
                    db = 0 if hand_idx[B.player_id] == sb else 1
                    pa = _log5(A.win_prob[(ZONES[za], DEPS[da])], B.win_prob[(ZONES[zb], DEPS[db])])
                    taken[A.player_id] += m
                    taken[B.player_id] += m
                    for w_, z_w, d_w, l_, z_l, d_l, pw in (
                        (A, za, da, B, zb, db, pa),
                        (B, zb, db, A, za, da, 1.0 - pa),
                    ):
                        key = (w_.player_id, z_w, d_w)
                        win[key] = win.get(key, 0.0) + m * pw
                        for c, pc in ((True, w_.clean_prob), (False, 1.0 - w_.clean_prob)):
                            lk = (l_.player_id, z_l, d_l, c)
                            loss[lk] = loss.get(lk, 0.0) + m * pw * pc
    return _Masses(win=win, loss=loss, taken=taken)


def _winner_bucket_mass(params: SynthParams, masses: _Masses) -> Dict[Tuple[str, int, int, int, bool], float]:
    """Expected winner rows per (player, zone, direction, dep, clean)."""
    out = {}
    for (pid, z, s), m in masses.win.items():
        p = params.player(pid)
        dist = p.dir_dist[DEPS[s]]
        for i in range(8):
            for c, pc in ((True, p.clean_prob), (False, 1.0 - p.clean_prob)):
                out[(pid, z, i, s, c)] = m * dist[i] * pc
    return out


def analytic_baselines(params: SynthParams) -> LeagueBaselines:
    """League baselines the estimators converge to under `params`."""
    ev = params.events
    masses = _masses(params)
    buckets = _winner_bucket_mass(params, masses)

    dir_num = [0.0] * 8
    dir_den = [0.0] * 8
    cat_mass: Dict[CategoryKey, float] = {}
    cat_events: Dict[CategoryKey, float] = {}
    bucket_mass: Dict[ExpectedKey, float] = {}
    for (pid, z, i, s, c), m in buckets.items():
        e = ev.event_prob[(ZONES[z], DIRS[i], c)]
        dir_num[i] += m * e
        dir_den[i] += m
        ck = (ZONES[z], DEPS[s], c)
        cat_mass[ck] = cat_mass.get(ck, 0.0) + m
        cat_events[ck] = cat_events.get(ck, 0.0) + m * e
        ek = (ZONES[z], DIRS[i], DEPS[s], c)
        bucket_mass[ek] = bucket_mass.get(ek, 0.0) + m
    for (pid, z, s, c), m in masses.loss.items():
        ck = (ZONES[z], DEPS[s], c)
        cat_mass[ck] = cat_mass.get(ck, 0.0) + m
        cat_events[ck] = cat_events.get(ck, 0.0) + m * ev.loss_event_prob[ZONES[z]]

    category = {ck: cat_events[ck] / m for ck, m in cat_mass.items() if m > 0}
    expected: Dict[ExpectedKey, Optional[float]] = {}
    for ek in ALL_EXPECTED_KEYS:
        if bucket_mass.get(ek, 0.0) > 0:
            z, d, s, c = ek
            expected[ek] = 2.0 * (ev.event_prob[(z, d, c)] - category[(z, s, c)])
        else:
            expected[ek] = None
    return LeagueBaselines(
        dir_event_rate={DIRS[i]: (dir_num[i] / dir_den[i] if dir_den[i] > 0 else None) for i in range(8)},
        expected_event_delta=expected,
        category_event_rate=category,
    )


def analytic_ee(params: SynthParams, baselines: Optional[LeagueBaselines] = None) -> Dict[str, float]:
    """Limit of each player's EE: league direction rate x expected win share."""
    baselines = baselines or analytic_baselines(params)
    masses = _masses(params)
    buckets = _winner_bucket_mass(params, masses)
    wins: Dict[Tuple[str, int], float] = {}
    for (pid, z, i, s, c), m in buckets.items():
        wins[(pid, i)] = wins.get((pid, i), 0.0) + m
    out = {}
    for p in params.players:
        taken = masses.taken[p.player_id]
        out[p.player_id] = sum(
            (baselines.dir_event_rate[DIRS[i]] or 0.0) * wins.get((p.player_id, i), 0.0) / taken
            for i in range(8)
        ) if taken > 0 else 0.0
    return out


def analytic_event_skill(params: SynthParams) -> Dict[str, float]:
    """Expected events per win for each player (zone mix, direction and cleanliness)."""
    masses = _masses(params)
    buckets = _winner_bucket_mass(params, masses)
    num: Dict[str, float] = {}
    den: Dict[str, float] = {}
    for (pid, z, i, s, c), m in buckets.items():
        num[pid] = num.get(pid, 0.0) + m * params.events.event_prob[(ZONES[z], DIRS[i], c)]
        den[pid] = den.get(pid, 0.0) + m
    return {pid: num[pid] / den[pid] for pid in num}


def synthesize_external_metrics(
    params: SynthParams,
    seed: int,
    records: Optional[Sequence[FaceoffRecord]] = None,
    skill_slope: float = 60.0,
    noise_sd: float = 1.0,
) -> List[ExternalPlayerMetrics]:
    """External CF%/XGD columns where post-win event skill drives xgd linearly.

    xgd = 50 + skill_slope * (skill - mean skill) + noise, clipped to [0, 100];
    cf_pct follows the same skill with triple the noise.
    """
    rng = np.random.default_rng(seed)
    skill = analytic_event_skill(params)
    mean = sum(skill.values()) / len(skill)
    counts: Dict[str, int] = {}
    for rec in records or ():
        counts[rec.winner_player] = counts.get(rec.winner_player, 0) + 1
        counts[rec.loser_player] = counts.get(rec.loser_player, 0) + 1
    out = []
    for p in params.players:
        base = 50.0 + skill_slope * (skill[p.player_id] - mean)
        xgd = float(np.clip(base + rng.normal(0.0, noise_sd), 0.0, 100.0))
        cf = float(np.clip(base + rng.normal(0.0, 3 * noise_sd), 0.0, 100.0))
        out.append(ExternalPlayerMetrics(p.player_id, round(cf, 6), round(xgd, 6), counts.get(p.player_id, 0)))
    return out
