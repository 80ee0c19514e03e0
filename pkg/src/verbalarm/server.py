"""Multi-client session service: text command in, dependency tree / SDC /
trajectory artifacts echoed back, execution ticks streamed out.

Each session owns a copy of the world; the lexicon is server-global so a
learned word benefits every client. Stop requests bypass the per-session
command queue (see transport) and interrupt the running execution.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field

import numpy as np

from . import controller, deptree, lexicon as lexicon_mod, sdc as sdc_mod, sim
from .config import Config
from .grasp import cem, planner, segmentation
from .kinematics import KinematicChain, KinematicsError, default_chain
from .sdc import SDC, TriggerAction

PIPELINE_STAGES = ("deptree", "lexicon", "sdc", "controller", "grasp", "sim", "server")


class ServerError(Exception):
    pass


class SessionError(ServerError):
    def __init__(self, session_id):
        super().__init__(f"unknown session: {session_id!r}")


class NoPendingMenu(ServerError):
    pass


class MenuIndexOutOfRange(ServerError):
    def __init__(self, index, size):
        super().__init__(f"grasp {index} not in menu of {size}")


@dataclass
class Session:
    id: str
    world: sim.World
    pending_menu: tuple[str, list[planner.GraspCandidate]] | None = None
    history: list[dict] = field(default_factory=list)
    current_run = None
    out_seq: int = 0
    in_seq: int = 0
    lock: threading.RLock = field(default_factory=threading.RLock)


def _tree_wire(tree: deptree.DependencyTree) -> dict:
    return {
        "sentence": tree.sentence,
        "tokens": [
            {"index": t.index, "text": t.text, "pos": t.pos,
             "head": t.head, "dep": t.dep}
            for t in tree.tokens
        ],
        "conllu": deptree.to_conllu(tree),
    }


class Service:
    """Pipeline glue shared by the socket server, the REPL and batch mode."""

    def __init__(self, world: sim.World | None = None,
                 lexicon: lexicon_mod.Lexicon | None = None,
                 config: Config | None = None,
                 chain: KinematicChain | None = None,
                 lexicon_path: str | None = None):
        self.config = config or Config()
        self.chain = chain or default_chain()
        self.defaults = dict(self.chain.defaults)
        if self.config.default_cartesian_m is not None:
            self.defaults["cartesian_m"] = self.config.default_cartesian_m
        if self.config.default_joint_rad is not None:
            self.defaults["joint_rad"] = self.config.default_joint_rad
        self.base_world = world or sim.default_world(self.chain)
        self.lexicon = lexicon or lexicon_mod.Lexicon.default()
        self.lexicon_path = lexicon_path
        self.lexicon_lock = threading.RLock()
        self.sessions: dict[str, Session] = {}
        self._sessions_lock = threading.RLock()
        self.lexicon_listeners: list = []   # callbacks fed lexicon_update payloads

    # -- session management ------------------------------------------------

    def create_session(self) -> Session:
        session = Session(id=uuid.uuid4().hex[:12], world=self.base_world.copy())
        with self._sessions_lock:
            self.sessions[session.id] = session
        return session

    def session(self, session_id: str) -> Session:
        with self._sessions_lock:
            if session_id not in self.sessions:
                raise SessionError(session_id)
            return self.sessions[session_id]

    def close_session(self, session_id: str) -> None:
        with self._sessions_lock:
            session = self.sessions.pop(session_id, None)
        if session is not None and session.current_run is not None:
            session.current_run.stop()

    def interrupt(self, session_id: str) -> bool:
        """Stop the session's running execution, if any. Idempotent."""
        session = self.session(session_id)
        run = session.current_run
        if run is not None:
            run.stop()
        return True

    def is_stop_text(self, text: str) -> bool:
        """Cheap check used by transports to let stop commands jump the queue."""
        try:
            words = deptree.tokenize(text, self.lexicon)
        except deptree.DepTreeError:
            return False
        with self.lexicon_lock:
            for word in words:
                hit = self.lexicon.lookup(word, "TriggerWords")
                if hit is not None and hit.name == "Stop":
                    return True
        return False

    # -- command pipeline ----------------------------------------------------

    def process(self, session_id: str, text: str):
        """Run one text command; yields (kind, payload) messages in order."""
        session = self.session(session_id)
        record = {"command": text, "sdcs": [], "outcome": "error"}
        session.history.append(record)

        with self.lexicon_lock:
            try:
                tree = deptree.parse_command(text, self.lexicon)
            except deptree.UnparsableCommand:
                yield self._error("sdc", sdc_mod.NoEventFound(text))
                record["outcome"] = "error:NoEventFound"
                return
            except deptree.DepTreeError as exc:
                yield self._error("deptree", exc)
                return
            try:
                items = sdc_mod.extract(tree, self.lexicon)
            except lexicon_mod.LexiconError as exc:
                yield self._error("lexicon", exc)
                return
            except sdc_mod.SdcError as exc:
                yield self._error("sdc", exc)
                return

        wire_items = [sdc_mod.to_wire(item) for item in items]
        record["sdcs"] = wire_items
        yield ("sdc_result", {"tree": _tree_wire(tree), "sdcs": wire_items})

        learned = [i for i in items if isinstance(i, TriggerAction) and i.kind == "Learn"]
        if learned:
            self._persist_lexicon()
            for action in learned:
                update = {"new_word": action.new_word, "target": action.target}
                for listener in list(self.lexicon_listeners):
                    listener(update)
                yield ("lexicon_update", update)

        for index, item in enumerate(items):
            if isinstance(item, TriggerAction):
                if item.kind == "Stop":
                    self.interrupt(session_id)
                    record["outcome"] = "stopped"
                    yield ("stop", {"acknowledged": True})
                continue
            outcome = yield from self._run_sdc(session, item, clause=index)
            record["outcome"] = outcome
            if outcome.startswith("error"):
                return

    def _run_sdc(self, session: Session, clause_sdc: SDC, clause: int):
        # "grasp number two": a Grab with a bare menu number selects from the
        # pending grasp menu rather than classifying as a task command
        number = clause_sdc.joint_number()
        if clause_sdc.event.name == "Grab" and clause_sdc.object is None \
                and number is not None:
            return (yield from self.select(session.id, number))

        try:
            level = controller.classify(clause_sdc, self.defaults)
        except controller.ControllerError as exc:
            yield self._error("controller", exc)
            return f"error:{type(exc).__name__}"

        if level.kind == "task":
            return (yield from self._plan_grasps(session, level.target, clause))

        try:
            trajectory = controller.translate(
                self.chain, session.world.robot, clause_sdc,
                defaults=self.defaults)
        except (controller.ControllerError, KinematicsError) as exc:
            yield self._error("controller", exc)
            return f"error:{type(exc).__name__}"
        yield ("trajectory", {
            "clause": clause,
            "level": level.kind,
            "samples": len(trajectory.samples),
            "duration": trajectory.samples[-1].time if trajectory.samples else 0.0,
        })
        return (yield from self._execute(session, trajectory, clause))

    def _execute(self, session: Session, trajectory: controller.JointTrajectory,
                 clause: int):
        execution = sim.execute(session.world, trajectory, self.config.tick_rate,
                                realtime=self.config.realtime)
        session.current_run = execution
        outcome = "completed"
        try:
            for tick in execution.ticks():
                payload = tick.to_wire()
                payload["clause"] = clause
                payload["objects"] = [o.to_dict() for o in session.world.objects]
                yield ("tick", payload)
            if execution.stopped:
                outcome = "stopped"
            elif execution.faulted:
                outcome = "fault"
        finally:
            session.current_run = None
        return outcome

    # -- grasp planning and selection ---------------------------------------

    def _plan_grasps(self, session: Session, object_name: str, clause: int):
        world = session.world
        targets = [o for o in world.objects if o.name == object_name]
        if not targets:
            yield self._error("server", sim.ObjectUnknown(object_name))
            return "error:ObjectUnknown"
        target = targets[0]
        cfg = self.config
        try:
            cloud = sim.synth_cloud(world, resolution=cfg.cloud_resolution,
                                    noise_sigma=cfg.cloud_noise_sigma, seed=cfg.seed)
            _, above = segmentation.remove_plane(
                cloud, cfg.ransac_threshold, cfg.ransac_iterations, seed=cfg.seed)
            clusters = segmentation.euclidean_cluster(
                above, cfg.cluster_tolerance, cfg.cluster_min_size,
                cfg.cluster_max_size)
        except (sim.SimError, segmentation.SegmentationError) as exc:
            yield self._error("grasp", exc)
            return f"error:{type(exc).__name__}"
        if not clusters:
            yield self._error("grasp", segmentation.SegmentationError("no clusters"))
            return "error:NoClusters"
        center = world.object_center(target)[:2]
        cluster = min(clusters,
                      key=lambda c: float(np.linalg.norm(c.centroid[:2] - center)))
        params = cem.CEMParams(cfg.cem.population, cfg.cem.elite_fraction,
                               cfg.cem.gmm_components, cfg.cem.iterations,
                               cfg.cem.init_cov_scale)
        candidates = planner.sample_candidates(
            cluster, n=max(cfg.cem.population, 32), seed=cfg.seed,
            max_width=cfg.gripper_max_width,
            friction_cone_deg=cfg.friction_cone_deg)
        candidates.append(cem.cem_refine(
            cluster, params, seed=cfg.seed, max_width=cfg.gripper_max_width,
            friction_cone_deg=cfg.friction_cone_deg))
        robust = [c for c in candidates if c.q > 0]
        if not robust:
            yield self._error("grasp", segmentation.SegmentationError(
                f"no robust grasp found on {target.id}"))
            return "error:NoRobustGrasp"
        menu = planner.select_diverse(robust, cfg.diversity_eps, cfg.menu_size,
                                      cfg.diversity_angle_weight)
        session.pending_menu = (target.id, menu)
        yield ("grasp_menu", {
            "object": target.id,
            "clause": clause,
            "eps": cfg.diversity_eps,
            "candidates": [c.to_wire(index=i) for i, c in enumerate(menu, start=1)],
        })
        return "menu"

    def select(self, session_id: str, index: int):
        """Execute candidate `index` (1-based) from the pending grasp menu."""
        session = self.session(session_id)
        menu = session.pending_menu
        if menu is None:
            yield self._error("server", NoPendingMenu("no grasp menu pending"))
            return "error:NoPendingMenu"
        object_id, candidates = menu
        if not (1 <= index <= len(candidates)):
            err = MenuIndexOutOfRange(index, len(candidates))
            yield self._error("server", err)
            return "error:IndexOutOfRange"
        session.pending_menu = None
        candidate = candidates[index - 1]
        if not session.world.bins:
            yield self._error("server", sim.BinUnknown("<none configured>"))
            return "error:BinUnknown"
        bin_id = session.world.bins[0].id
        try:
            run = sim.task_pick_place(session.world, object_id, candidate, bin_id,
                                      self.config.tick_rate,
                                      realtime=self.config.realtime)
        except sim.SimError as exc:
            yield self._error("sim", exc)
            return f"error:{type(exc).__name__}"
        session.current_run = run
        outcome = "completed"
        try:
            for tick in run.ticks():
                payload = tick.to_wire()
                payload["objects"] = [o.to_dict() for o in session.world.objects]
                yield ("tick", payload)
            if run.stopped:
                outcome = "stopped"
        finally:
            session.current_run = None
        session.history.append(
            {"command": f"select_grasp {index}", "sdcs": [], "outcome": outcome})
        return outcome

    # -- misc -----------------------------------------------------------------

    def _persist_lexicon(self) -> None:
        if self.lexicon_path:
            with self.lexicon_lock:
                self.lexicon.save(self.lexicon_path)

    @staticmethod
    def _error(stage: str, exc: Exception):
        return ("error", {"stage": stage, "error": type(exc).__name__,
                          "detail": str(exc)})


# -- batch regression over command corpora -------------------------------------

def _matches(expected, actual) -> bool:
    if isinstance(expected, dict):
        return all(k in actual and _matches(v, actual[k]) for k, v in expected.items())
    if isinstance(expected, list):
        return (isinstance(actual, list) and len(expected) == len(actual)
                and all(_matches(e, a) for e, a in zip(expected, actual)))
    return expected == actual


def run_batch(corpus_path: str, lexicon: lexicon_mod.Lexicon | None = None) -> dict:
    """Extract every command in a corpus file and check `# expected:` JSON
    annotations. Learn commands mutate only the batch-local lexicon."""
    lex = lexicon or lexicon_mod.Lexicon.default()
    entries = []
    with open(corpus_path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("expected:") and entries:
                    entries[-1]["expected"] = json.loads(body[len("expected:"):])
                continue
            entries.append({"line": line_no, "command": line, "expected": None})

    results = []
    passed = failed = 0
    for entry in entries:
        try:
            tree = deptree.parse_command(entry["command"], lex)
            items = sdc_mod.extract(tree, lex)
            actual = [sdc_mod.to_wire(item) for item in items]
        except (deptree.UnparsableCommand, sdc_mod.NoEventFound):
            actual = {"error": "NoEventFound"}
        except (deptree.DepTreeError, sdc_mod.SdcError, lexicon_mod.LexiconError) as exc:
            actual = {"error": type(exc).__name__}
        ok = True
        if entry["expected"] is not None:
            ok = _matches(entry["expected"], actual)
        passed += ok
        failed += not ok
        results.append({"line": entry["line"], "command": entry["command"],
                        "result": actual, "expected": entry["expected"], "pass": ok})
    return {
        "total": len(results),
        "annotated": sum(1 for e in entries if e["expected"] is not None),
        "passed": passed,
        "failed": failed,
        "ok": failed == 0,
        "results": results,
    }
