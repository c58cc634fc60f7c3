"""The ``sax`` command line: check, expand, run, trace and verify."""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

import click

from . import library
from .ast import ProcDef
from .diagnostics import SaxError
from .encode import decode_result, encode_int
from .printer import show_items
from .program import check_program, load_file
from .runtime import DEFAULT_MAX_STEPS, Scheduler, decode, run, show_tree, start
from .verify import CorruptingEngine, Engine, MovingCopyEngine, verify_entry

POLICIES = click.Choice(["fifo", "lifo", "random"])


def _load(path: str):
    """Load and check a file; prints diagnostics and exits 1 on failure."""
    try:
        prog = load_file(path)
    except SaxError as e:
        for d in e.diagnostics:
            click.echo(d.format(path), err=True)
        sys.exit(1)
    diags = check_program(prog)
    if diags:
        for d in diags:
            click.echo(d.format(path), err=True)
        sys.exit(1)
    return prog


def _scheduler(sched: str, seed: int | None) -> Scheduler:
    if sched == "random" and seed is None:
        raise click.UsageError("--sched random needs --seed")
    return Scheduler(sched, seed)


def _inputs(prog, entry: str, args: tuple[str, ...]) -> dict:
    if entry not in prog.sig.decls:
        raise click.UsageError(f"no process named {entry}")
    decl = prog.sig.decls[entry]
    types = dict(decl.params)
    given = {}
    for a in args:
        name, sep, value = a.partition("=")
        if not sep or name not in types:
            raise click.UsageError(f"--arg expects NAME=INT with NAME a parameter of {entry}")
        try:
            given[name] = encode_int(prog.sig, types[name], int(value))
        except ValueError as e:
            raise click.UsageError(f"--arg {a}: {e}")
    missing = [x for x in types if x not in given]
    if missing:
        raise click.UsageError(f"{entry} needs --arg for {', '.join(missing)}")
    return given


@click.group()
def main():
    """Parse, check, run and verify adjoint shared-memory programs."""


@main.command()
@click.argument("files", nargs=-1, type=click.Path(exists=True, dir_okay=False))
def check(files):
    """Type-check FILES; exit status 1 if any has a diagnostic."""
    failed = False
    for f in files:
        try:
            prog = load_file(f)
            diags = check_program(prog)
        except SaxError as e:
            diags = e.diagnostics
        for d in diags:
            click.echo(d.format(f))
        if diags:
            failed = True
        else:
            click.echo(f"{f}: ok")
    sys.exit(1 if failed else 0)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
def expand(file):
    """Print the program of FILE with all sugar expanded."""
    prog = _load(file)
    items = [replace(it, body=prog.kernel[it.name]) if isinstance(it, ProcDef) else it
             for it in prog.items]
    click.echo(show_items(items), nl=False)


def _run_options(f):
    f = click.option("--entry", required=True, help="Process to run.")(f)
    f = click.option("--sched", type=POLICIES, default="fifo", show_default=True)(f)
    f = click.option("--seed", type=int, default=None, help="Seed for --sched random.")(f)
    f = click.option("--max-steps", type=click.IntRange(min=0), default=DEFAULT_MAX_STEPS, show_default=True)(f)
    f = click.option("--arg", "args", multiple=True, metavar="NAME=INT",
                     help="Integer input for a number-typed parameter.")(f)
    f = click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")(f)
    return f


def _execute(file, entry, sched, seed, max_steps, args, record):
    prog = _load(file)
    scheduler = _scheduler(sched, seed)
    inputs = _inputs(prog, entry, args)
    engine, cfg, root = start(prog, entry, inputs)
    res = run(engine, cfg, scheduler, max_steps, record=record)
    tree = decode(res.config, root)
    ty = prog.sig.decls[entry].result[1]
    return res, root, tree, decode_result(prog.sig, ty, tree)


def _report(res, root, tree, number, as_json):
    if as_json:
        click.echo(json.dumps({
            "status": res.status, "steps": res.steps, "root": str(root),
            "value": show_tree(tree), "number": number,
            "blocked": [str(a) for a in res.blocked],
        }))
    else:
        click.echo(show_tree(tree) + (f"  = {number}" if number is not None else ""))
        click.echo(f"status: {res.status}, steps: {res.steps}")
        if res.blocked:
            click.echo("blocked: " + ", ".join(map(str, res.blocked)))


@main.command("run")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@_run_options
def run_cmd(file, entry, sched, seed, max_steps, args, as_json):
    """Run ENTRY from FILE and print the value it writes."""
    res, root, tree, number = _execute(file, entry, sched, seed, max_steps, args, record=False)
    _report(res, root, tree, number, as_json)
    sys.exit(1 if res.status == "stuck" else 0)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@_run_options
def trace(file, entry, sched, seed, max_steps, args, as_json):
    """Like run, but first print every step taken."""
    res, root, tree, number = _execute(file, entry, sched, seed, max_steps, args, record=True)
    if as_json:
        click.echo(json.dumps([{"rule": s.rule, "consume": list(map(str, s.consume)),
                                "produce": list(map(str, s.produce))} for s in res.trace]))
    else:
        for n, st in enumerate(res.trace):
            click.echo(st.format(n))
    if not as_json:
        _report(res, root, tree, number, False)
    sys.exit(1 if res.status == "stuck" else 0)


# Known-divergent corpus runs only need enough steps to show they keep going.
DIVERGENT_STEPS = 5_000

ENGINES = {"none": Engine, "copy": MovingCopyEngine, "corrupt": CorruptingEngine}


def _targets(files, quick):
    """(name, program, entry, sequential, step cap) for every entry to verify."""
    out = []
    if not files:
        runs = library.runs()
        if quick:
            wanted = {"bin.sax", "bin_seq.sax", "mapreduce_forkjoin.sax", "counter.sax",
                      "lambda_unr_cbn.sax", "futures_linear.sax"}
            runs = [r for r in runs if r.file in wanted and r.terminates]
        for r in runs:
            cap = None if r.terminates else DIVERGENT_STEPS
            out.append((r.file, library.program(r.file), r.entry, r.sequential, cap))
        return out
    for f in files:
        prog = _load(f)
        for name, d in prog.sig.decls.items():
            if not d.params and name in prog.sig.defs and any(
                    isinstance(it, ProcDef) and it.name == name for it in prog.items):
                out.append((Path(f).name, prog, name, False, None))
    return out


@main.command()
@click.argument("files", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option("--seeds", type=click.IntRange(min=1), default=25, show_default=True,
              help="Random schedules per entry (and seed pairs for confluence).")
@click.option("--quick", is_flag=True, help="A small subset with few seeds.")
@click.option("--max-steps", type=click.IntRange(min=1), default=100_000, show_default=True)
@click.option("--inject", type=click.Choice(sorted(ENGINES)), default="none",
              help="Run with a deliberately broken engine.")
@click.option("--json", "as_json", is_flag=True)
def verify(files, seeds, quick, max_steps, inject, as_json):
    """Check preservation, progress, confluence and sequentiality.

    Without FILES the shipped corpus is verified; otherwise every
    parameterless process defined in FILES is an entry.
    """
    if quick:
        seeds = min(seeds, 5)
    engine_cls = ENGINES[inject]
    rows = []
    for name, prog, entry, sequential, cap in _targets(files, quick):
        steps = max_steps if cap is None else min(cap, max_steps)
        rows += verify_entry(prog, name, entry, seeds=seeds, max_steps=steps,
                             engine_cls=engine_cls, sequential=sequential)
    failed = any(r.ok is False for r in rows)
    if as_json:
        click.echo(json.dumps([{**asdict(r), "result": r.result} for r in rows], indent=2))
    else:
        w = max([len(f"{r.program}:{r.entry}") for r in rows] + [7])
        click.echo(f"{'program':<{w}}  {'property':<12}  {'runs':>5}  result")
        for r in rows:
            line = f"{r.program + ':' + r.entry:<{w}}  {r.prop:<12}  {r.runs:>5}  {r.result}"
            if r.ok is not True and r.detail:
                line += f"  ({r.detail})"
            click.echo(line)
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
