"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 validation/verification failed,
3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import RunConfig, load_config
from .metrics import ast_edit_distance, halstead
from .orchestrator import Engine, RunAborted, replay_advantages
from .sandbox import Sandbox
from .solver import verify_abduction, verify_deduction, verify_induction
from .types import InductionTask, TaskType, Triplet

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codeloop",
        description="Self-play engine for verifiable code-reasoning tasks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_overrides(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="TOML config file")
        p.add_argument("--iterations", type=int, default=None)
        p.add_argument("--batch-size", type=int, default=None, dest="batch_size")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workdir", default=None)
        p.add_argument(
            "--advantage-mode", choices=("trr", "global"), default=None,
            dest="advantage_mode",
        )
        p.add_argument(
            "--metrics", choices=("on", "off"), default=None,
            help="override metrics_enabled",
        )

    p_seed = sub.add_parser("seed", help="initialize the task buffers only")
    add_config_overrides(p_seed)

    p_run = sub.add_parser("run", help="run the full self-play loop")
    add_config_overrides(p_run)

    p_validate = sub.add_parser(
        "validate", help="run one program+input through the validation pipeline"
    )
    p_validate.add_argument("program_file", help="file holding the program source")
    p_validate.add_argument("input", help="argument expression for f")
    p_validate.add_argument("--interpreter", default="python3")
    p_validate.add_argument("--timeout", type=float, default=10.0)

    p_verify = sub.add_parser("verify", help="one-shot answer check for any task type")
    p_verify.add_argument(
        "--task-type", required=True, choices=[t.value for t in TaskType]
    )
    p_verify.add_argument("--program-file", required=True)
    p_verify.add_argument("--gold-input", help="abduction: original input")
    p_verify.add_argument("--agent-input", help="abduction: proposed input")
    p_verify.add_argument("--gold-output", help="deduction: stored output repr")
    p_verify.add_argument("--agent-output", help="deduction: predicted output repr")
    p_verify.add_argument(
        "--pairs-file", help="induction: JSONL of [input, output] pairs"
    )
    p_verify.add_argument(
        "--agent-program-file", help="induction: file holding the proposed program"
    )
    p_verify.add_argument("--interpreter", default="python3")
    p_verify.add_argument("--timeout", type=float, default=10.0)

    p_metrics = sub.add_parser("metrics", help="recompute task metrics over a buffer")
    p_metrics.add_argument("--buffer", required=True, help="buffer JSONL file")
    p_metrics.add_argument("--out", default=None, help="output JSONL (default stdout)")
    p_metrics.add_argument("--interpreter", default="python3")

    p_replay = sub.add_parser(
        "replay", help="recompute advantages over an experience file"
    )
    p_replay.add_argument("--experience", required=True)
    p_replay.add_argument("--mode", choices=("trr", "global"), default="trr")
    p_replay.add_argument("--out", default=None, help="rewritten experience JSONL")
    p_replay.add_argument(
        "--check", action="store_true",
        help="compare against stored advantages instead of rewriting",
    )
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {
        "iterations": args.iterations,
        "batch_size": args.batch_size,
        "seed": args.seed,
        "workdir": args.workdir,
        "advantage_mode": args.advantage_mode,
    }
    if args.metrics is not None:
        overrides["metrics_enabled"] = args.metrics == "on"
    return load_config(args.config, overrides)


def _cmd_seed(args: argparse.Namespace) -> int:
    engine = Engine(_config_from_args(args))
    buffers = engine.seed()
    print(json.dumps({"buffer_sizes": buffers.sizes()}))
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    engine = Engine(_config_from_args(args))
    report = engine.run()
    print(
        json.dumps(
            {
                "iterations_completed": report.iterations_completed,
                "records_emitted": report.records_emitted,
                "buffer_sizes": report.buffer_sizes,
                "experience_path": report.experience_path,
                "reverify_failures": report.reverify_failures,
            }
        )
    )
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    program = Path(args.program_file).read_text(encoding="utf-8")
    sandbox = Sandbox(interpreter=args.interpreter, timeout=args.timeout)
    verdict = sandbox.validate_and_construct(program, args.input)
    if verdict.valid:
        print(verdict.output)
        return EXIT_OK
    print(f"invalid: {verdict.failure}", file=sys.stderr)
    return EXIT_INVALID


def _cmd_verify(args: argparse.Namespace) -> int:
    program = Path(args.program_file).read_text(encoding="utf-8")
    sandbox = Sandbox(interpreter=args.interpreter, timeout=args.timeout)
    task_type = TaskType(args.task_type)
    if task_type is TaskType.ABDUCTION:
        if not (args.gold_input and args.agent_input):
            print("abduction needs --gold-input and --agent-input", file=sys.stderr)
            return EXIT_USAGE
        correct = verify_abduction(
            sandbox, program, args.gold_input, args.agent_input, args.timeout,
            gold_output=args.gold_output,
        )
    elif task_type is TaskType.DEDUCTION:
        if not (args.gold_output and args.agent_output):
            print("deduction needs --gold-output and --agent-output", file=sys.stderr)
            return EXIT_USAGE
        correct = verify_deduction(
            sandbox, program, args.gold_output, args.agent_output, args.timeout
        )
    else:
        if not (args.pairs_file and args.agent_program_file):
            print(
                "induction needs --pairs-file and --agent-program-file",
                file=sys.stderr,
            )
            return EXIT_USAGE
        pairs = []
        with open(args.pairs_file, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    inp, out = json.loads(line)
                    pairs.append((inp, out))
        agent_program = Path(args.agent_program_file).read_text(encoding="utf-8")
        correct = verify_induction(sandbox, agent_program, pairs, args.timeout)
    print("correct" if correct else "incorrect")
    return EXIT_OK if correct else EXIT_INVALID


def _cmd_metrics(args: argparse.Namespace) -> int:
    sandbox = Sandbox(interpreter=args.interpreter)
    rows = []
    with open(args.buffer, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            task = (
                InductionTask.from_json_obj(obj)
                if "pairs" in obj
                else Triplet.from_json_obj(obj)
            )
            row: dict = {"task_type": obj["task_type"]}
            tokens = sandbox.token_stream(task.program)
            if tokens:
                hal = halstead(tokens)
                row["halstead_volume"] = hal.volume
                row["branch_count"] = hal.branch_count
            tree = sandbox.tree_dump(task.program)
            if tree is not None:
                distance, _ = ast_edit_distance(tree, tree, tokens, tokens)
                row["self_distance"] = distance
            rows.append(row)
    out_text = "".join(json.dumps(row) + "\n" for row in rows)
    if args.out:
        Path(args.out).write_text(out_text, encoding="utf-8")
    else:
        sys.stdout.write(out_text)
    return EXIT_OK


def _cmd_replay(args: argparse.Namespace) -> int:
    stored = []
    with open(args.experience, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                stored.append(json.loads(line)["advantage"])
    records = replay_advantages(args.experience, mode=args.mode)
    if args.check:
        mismatches = sum(
            1
            for old, record in zip(stored, records)
            if old is None or abs(old - record.advantage) > 1e-9
        )
        print(json.dumps({"records": len(records), "mismatches": mismatches}))
        return EXIT_OK if mismatches == 0 else EXIT_INVALID
    out_path = args.out or args.experience
    text = "".join(json.dumps(r.to_json_obj()) + "\n" for r in records)
    Path(out_path).write_text(text, encoding="utf-8")
    print(json.dumps({"records": len(records), "out": str(out_path)}))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    handlers = {
        "seed": _cmd_seed,
        "run": _cmd_run,
        "validate": _cmd_validate,
        "verify": _cmd_verify,
        "metrics": _cmd_metrics,
        "replay": _cmd_replay,
    }
    try:
        return handlers[args.command](args)
    except RunAborted as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
