"""Closed-loop episode: perceive, decide, plan and track until the route ends or an accident stops it."""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..control import (
    DensePath, ObstaclePrediction, PathError, PlannerConfig, PlanningError, VehicleController, densify,
    frenet_project, lookahead_select, plan, shift_path,
)
from ..decision import (
    BackendError, EgoStatus, Experience, HistoryQueue, HistoryRecord, InvalidDecision, MemoryBank, MetaAction,
    NavigationHint, PromptSet, analytic_decide, bank_revise, heuristic_decide, load, make_backend, push_history,
    reflect,
)
from ..encoder import (
    INTENTS, EncoderConfig, EncoderParams, GridRasterizer, TrainingRecord, ego_state, encode, load_params,
)
from ..perception import SceneDescription, describe_scene
from ..sim import AccidentInfo, Scenario, ScenarioError, World, detect_accident, load_scenario, route_progress
from ..sim.geometry import cumulative_arclength, project_to_polyline
from .config import EpisodeConfig
from .metrics import EpisodeLog, compute_metrics
from .scenarios import builtin

log = logging.getLogger(__name__)

PATH_EXTENSION = 60.0  # m of path beyond the route end
OBSTACLE_RANGE = 100.0  # m
STOP_MARGIN = 1.0  # m kept between front bumper and the stop point


@dataclass
class EpisodeReport:
    RC: float
    IS: float
    DS: float
    infractions: list[dict]
    trace: list[dict]
    timing: dict
    config: dict
    prompt_hashes: dict
    penalties: dict
    scenario: dict
    termination: str
    timeout: bool = False
    fallbacks: int = 0
    reflections: int = 0
    bank_inserted: int = 0

    def decisions(self) -> list[tuple[int, str]]:
        return [(r["tick"], r["decision"]) for r in self.trace]

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeReport":
        return cls(**d)


@dataclass
class EpisodeResult:
    report: EpisodeReport
    log: list[dict]
    bank: MemoryBank
    delta: list[Experience] = field(default_factory=list)
    # encoder training records: decision-tick features labelled with the next control
    training: list[TrainingRecord] = field(default_factory=list)


def resolve_scenario(spec) -> Scenario:
    if isinstance(spec, dict):
        return load_scenario(spec)
    if isinstance(spec, str) and spec.startswith("builtin:"):
        return load_scenario(builtin(spec))
    return load_scenario(Path(spec))


def scenario_hash(scn: Scenario) -> str:
    return hashlib.sha256(scn.canonical().encode()).hexdigest()[:16]


def _encoder(config: EpisodeConfig) -> EncoderParams:
    if config.encoder_weights:
        return load_params(config.encoder_weights)
    return EncoderParams.initialise(EncoderConfig(), seed=config.encoder_seed)


def _shifted_path(base: DensePath, scn: Scenario, k: int) -> DensePath:
    """Reference path ``k`` lanes to the left of the route (negative: right)."""
    if k == 0:
        return base
    shifted = shift_path(base, k * base.lane_width)
    lane_ids, left, right = [], [], []
    for p in shifted.points:
        lane, _, _ = scn.lanes.locate(p)
        lane_ids.append(lane.id)
        left.append(lane.left is not None)
        right.append(lane.right is not None)
    return DensePath(shifted.points, shifted.s, tuple(lane_ids), np.array(left), np.array(right), base.lane_width)


class _Navigator:
    """Navigation hint from the scenario's route events and the ego's route position."""

    def __init__(self, scn: Scenario):
        self.scn = scn
        self.route = np.asarray(scn.route, dtype=float)
        self.total = float(cumulative_arclength(self.route)[-1])
        self.done: set[int] = set()

    def route_s(self, x: float, y: float) -> float:
        return project_to_polyline(self.route, (x, y))[0]

    def hint(self, x: float, y: float, lane_shift: int, shift_at_start: dict[int, int]) -> NavigationHint:
        s = self.route_s(x, y)
        target = self.scn.ego.target_speed
        for i, ev in enumerate(self.scn.navigation):
            if ev.to_s < s or i in self.done:
                continue
            if ev.from_s <= s:
                start = shift_at_start.setdefault(i, lane_shift)
                if ev.maneuver.startswith("lane_change") and lane_shift != start:
                    self.done.add(i)
                    continue
                return NavigationHint(ev.maneuver, 0.0, ev.target_speed or target)
            return NavigationHint(ev.maneuver, ev.from_s - s, target)
        return NavigationHint("straight", max(0.0, self.total - s), target)


def _stop_distance(desc: SceneDescription, half_length: float) -> float | None:
    """Along-path distance to stop short of the nearest stop-demanding object."""
    for o in desc.objects:
        if o.ahead <= 0:
            continue
        if o.category in ("traffic_light", "stop_sign"):
            if o.category == "traffic_light" and o.state == "green":
                continue
            return max(0.0, o.ahead - half_length - STOP_MARGIN)
        if o.lane_relation in ("same", "crossing"):
            return max(0.0, o.ahead - o.box[3] / 2.0 - half_length - STOP_MARGIN)
    return None


def _obstacles(snap) -> list[ObstaclePrediction]:
    out = []
    for a in snap.agents:
        if math.hypot(a.x - snap.ego.x, a.y - snap.ego.y) <= OBSTACLE_RANGE:
            out.append(ObstaclePrediction(a.id, a.x, a.y, a.heading, a.vx, a.vy, a.half_length, a.half_width))
    return out


def _call(pool, timeout: float, fn, *args):
    fut = pool.submit(fn, *args)
    try:
        return fut.result(timeout=timeout)
    except concurrent.futures.TimeoutError:
        raise BackendError(f"backend call exceeded {timeout} s") from None


def run_episode(config: EpisodeConfig, bank: MemoryBank | None = None, out_dir=None) -> EpisodeResult:
    """Run one episode; ``bank`` overrides ``config.bank_path`` and is not mutated."""
    wall_start = time.perf_counter()
    prompts = PromptSet.load(config.prompts_dir)
    if bank is None:
        bank = load(config.bank_path) if config.bank_path and Path(config.bank_path).exists() else MemoryBank()
    bank = bank.copy()
    try:
        scn = resolve_scenario(config.scenario)
    except (ScenarioError, OSError, KeyError) as exc:
        return _stub(config, prompts, bank, f"scenario error: {exc}")

    analytic = make_backend(config.analytic_backend)
    fast = make_backend(config.heuristic_backend, follow_threshold=config.follow_threshold) \
        if config.heuristic_backend == "experience_follower" else make_backend(config.heuristic_backend)
    encoder = _encoder(config)
    raster = GridRasterizer()
    world = World(scn, dt=config.physics_dt)
    base_path = densify(scn.route, scn.lanes, extend=PATH_EXTENSION)
    paths = {0: base_path}
    navigator = _Navigator(scn)
    controller = VehicleController()
    planner_cfg = PlannerConfig(ego_half_length=world.ego.half_length, ego_half_width=world.ego.half_width)
    history = HistoryQueue()
    window: deque = deque(maxlen=config.frames)
    max_sim = config.max_sim_time or scn.max_sim_time
    max_wall = config.max_wall_time or scn.max_wall_time

    records: list[dict] = []
    trace: list[dict] = []
    delta: list[Experience] = []
    ep_log = EpisodeLog()
    latencies: list[float] = []
    fallbacks = reflections = inserted = 0
    lane_shift = 0
    shift_at_start: dict[int, int] = {}
    progress = 0.0
    traj = None
    plan_tick = 0
    termination = "time_limit"
    timeout = False
    tpd = config.ticks_per_decision
    decision_count = 0
    pending = None
    training: list[TrainingRecord] = []

    pool = concurrent.futures.ThreadPoolExecutor(max_workers=1)
    try:
        snap = world.snapshot()
        while True:
            if snap.time >= max_sim - 1e-9:
                termination = "time_limit"
                break
            if time.perf_counter() - wall_start > max_wall:
                termination, timeout = "wall_time_limit", True
                break
            if snap.tick % tpd == 0:
                t0 = time.perf_counter()
                window.append(snap)
                desc = describe_scene(window, scenario=scn)
                ego = snap.ego
                d_base = frenet_project(base_path, ego.x, ego.y, max_offset=math.inf).d
                k_lane = int(round(d_base / base_path.lane_width))
                if k_lane != lane_shift and scn.lanes.on_any_lane(
                        (ego.x, ego.y), margin=0.0):
                    lane_shift = k_lane
                if lane_shift not in paths:
                    paths[lane_shift] = _shifted_path(base_path, scn, lane_shift)
                path = paths[lane_shift]
                nav = navigator.hint(ego.x, ego.y, lane_shift, shift_at_start)
                status = EgoStatus(speed=ego.speed, acceleration=ego.acceleration, steering=ego.steering)
                intent = INTENTS[nav.maneuver]
                grid = raster.features(snap, scn)
                token = encode(encoder, grid, ego_state(intent, ego.speed))
                pending = (grid, intent, ego.speed)
                shots: list[tuple[Experience, float]] = []
                source = config.mode
                try:
                    if config.mode == "analytic":
                        reasoning, action = _call(pool, config.backend_timeout, analytic_decide, analytic,
                                                  prompts.traffic_rules, desc, nav, status)
                    else:
                        shots = bank.retrieve(token.vector, config.k) if config.k > 0 else []
                        reasoning, action = _call(pool, config.backend_timeout, heuristic_decide, fast,
                                                  prompts.traffic_rules, [e for e, _ in shots], desc, nav, status,
                                                  [s for _, s in shots])
                except (BackendError, InvalidDecision) as exc:
                    reasoning, action, source = f"fallback after backend failure: {exc}", MetaAction.DC, "fallback"
                    fallbacks += 1
                    log.warning("tick %d: %s; falling back to DC", snap.tick, exc)
                    records.append({"type": "fallback", "tick": snap.tick, "error": str(exc),
                                    "raw": getattr(exc, "raw", None)})
                ctx = {"navigation": nav.to_dict(), "ego": status.to_dict()}
                if config.mode == "analytic" and source != "fallback":
                    exp = Experience(token.vector, desc, reasoning, action, "analytic",
                                     (config.episode_id, snap.tick), ctx)
                    bank.insert(exp)
                    delta.append(exp)
                    inserted += 1
                if decision_count % config.decisions_per_history == 0:
                    push_history(history, HistoryRecord(token.vector, desc, reasoning, action, snap.tick, ctx))
                decision_count += 1

                planned = action
                cfg_now = replace(planner_cfg, max_speed=nav.target_speed)
                fs = frenet_project(path, ego.x, ego.y, ego.heading, ego.speed, ego.acceleration,
                                    max_offset=math.inf)
                try:
                    result = plan(planned.value, fs, path, _obstacles(snap), nav.target_speed, cfg_now,
                                  _stop_distance(desc, ego.half_length))
                except PlanningError as exc:
                    log.info("tick %d: %s; keeping lane", snap.tick, exc)
                    planned = MetaAction.IDLE
                    result = plan(planned.value, fs, path, _obstacles(snap), nav.target_speed, cfg_now)
                traj, plan_tick = result.trajectory, snap.tick
                latencies.append(time.perf_counter() - t0)
                entry = {
                    "tick": snap.tick,
                    "time": round(snap.time, 6),
                    "decision": action.value,
                    "planned": planned.value,
                    "reasoning": reasoning,
                    "source": source,
                    "shots": [[list(e.created_at), round(s, 6)] for e, s in shots],
                    "emergency": traj.emergency,
                    "speed": round(ego.speed, 6),
                    "progress": round(progress, 6),
                    "navigation": nav.maneuver,
                    "objects": len(desc.objects),
                }
                trace.append(entry)
                records.append({"type": "decision", **entry, "summary": desc.summary,
                                "plan": result.debug_record()})

            target_speed, point = lookahead_select(traj, snap.ego.speed, snap.tick - plan_tick)
            control = controller.control(snap.ego, target_speed, point, config.physics_dt)
            if pending is not None:
                training.append(TrainingRecord(pending[0], pending[1], pending[2], control.steer, control.brake))
                pending = None
            snap = world.tick(control)
            progress = route_progress(scn.route, (snap.ego.x, snap.ego.y), progress)
            ep_log.progress.append(progress)

            accident = detect_accident(snap, scn)
            if accident is not None:
                ep_log.infractions.append(accident.kind)
                records.append({"type": "infraction", **accident.to_dict()})
                if config.reflection and history:
                    exp = reflect(analytic, prompts.reflection, accident, history, prompts.traffic_rules,
                                  config.episode_id)
                    bank.insert(exp)
                    delta.append(exp)
                    reflections += 1
                    records.append({"type": "reflection", "tick": snap.tick, "step_tick": exp.created_at[1],
                                    "decision": exp.decision.value, "reasoning": exp.reasoning,
                                    "fallback": exp.meta["fallback"]})
                if accident.kind != "red_light_violation":
                    termination = accident.kind
                    break
            if progress >= 1.0:
                termination = "route_complete"
                break
    finally:
        pool.shutdown(wait=False)

    if config.mode == "analytic":
        bank = bank_revise(bank)
    metrics = compute_metrics(ep_log, config.penalties)
    wall = time.perf_counter() - wall_start
    report = EpisodeReport(
        RC=metrics.RC, IS=metrics.IS, DS=metrics.DS,
        infractions=[r for r in records if r["type"] == "infraction"],
        trace=trace,
        timing={
            "wall_time": wall,
            "sim_time": snap.time,
            "ticks": snap.tick,
            "decisions": len(trace),
            "decision_latency_mean": float(np.mean(latencies)) if latencies else 0.0,
            "decision_latency_max": float(np.max(latencies)) if latencies else 0.0,
        },
        config=config.to_dict(),
        prompt_hashes=prompts.hashes(),
        penalties=dict(config.penalties),
        scenario={"name": scn.name, "hash": scenario_hash(scn)},
        termination=termination,
        timeout=timeout,
        fallbacks=fallbacks,
        reflections=reflections,
        bank_inserted=inserted + reflections,
    )
    records.append({"type": "report", **{k: v for k, v in report.to_dict().items() if k != "trace"}})
    if out_dir is not None:
        write_outputs(report, records, out_dir, config.episode_id)
    return EpisodeResult(report, records, bank, delta, training)


def _stub(config: EpisodeConfig, prompts: PromptSet, bank: MemoryBank, reason: str) -> EpisodeResult:
    log.error("%s", reason)
    report = EpisodeReport(
        RC=0.0, IS=1.0, DS=0.0, infractions=[], trace=[], timing={}, config=config.to_dict(),
        prompt_hashes=prompts.hashes(), penalties=dict(config.penalties), scenario={},
        termination=reason,
    )
    return EpisodeResult(report, [{"type": "error", "message": reason}], bank)


def write_outputs(report: EpisodeReport, records: list[dict], out_dir, name: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{name}.jsonl", "w") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")
    (out / f"{name}.report.json").write_text(json.dumps(report.to_dict(), indent=2))


def accident_of(report: EpisodeReport) -> AccidentInfo | None:
    """First terminal collision of a report, if any."""
    for inf in report.infractions:
        a = AccidentInfo.from_dict({k: v for k, v in inf.items() if k != "type"})
        if a.is_collision:
            return a
    return None
