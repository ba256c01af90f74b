#!/usr/bin/env python3
"""
Motor ejecutable para el cálculo de monitoreo distribuido

Uso:
    python main_cli.py explore sistema.mdpi --filter ntg
    python main_cli.py check a.mdpi b.mdpi --filter-a ntg --filter-b ltr
    python main_cli.py simulate sistema.mdpi --steps 50 --seed 7
    python main_cli.py compile contrato.re --strategy chor
    python main_cli.py verify-contract contrato.re sistema.mdpi --strategy all
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from ast_nodes import Par, loc
from bisim import Verdict, check_weak_bisim, filter_graph
from compiler import CompilerError, MonitorCompiler, read_source
from contract_compiler import CompileError, Placement, STRATEGIES
from explorer import (ExploreBounds, LtsGraph, default_universe, explore, fail_states,
                      simulate, terminal_states, trace_signature)
from filters import Filter, FilterError, apply_filter, builtin_filter, load_filter
from oracle import check_soundness
from semantics import Config, StepOptions, initial_config, system_locations, trace_logs

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DISTINGUISHED = 1
EXIT_INCONCLUSIVE = 2
EXIT_INPUT_ERROR = 3
EXIT_UNSOUND = 4

BISIM_EXIT = {
    Verdict.BISIMILAR: EXIT_OK,
    Verdict.DISTINGUISHED: EXIT_DISTINGUISHED,
    Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}

@dataclass
class RunConfig:
    command: str
    bounds: ExploreBounds = field(default_factory=ExploreBounds)
    clocks: Dict[str, int] = field(default_factory=dict)
    seed: int = 0
    output_format: str = "text"
    output: Optional[str] = None
    closed: bool = False
    observe_verdicts: bool = False
    monitor_taus: str = "tau"

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        bounds = ExploreBounds(args.max_unfold, args.max_trace, args.max_states)
        return cls(args.command, bounds, parse_assignments(args.clock, "--clock", int),
                   resolve_seed(getattr(args, "seed", None)), getattr(args, "format", "text"),
                   getattr(args, "output", None), getattr(args, "closed", False),
                   getattr(args, "observe_verdicts", False), args.ltr_monitor_taus)

    def step_options(self, universe=None) -> StepOptions:
        return StepOptions(universe=universe, closed=self.closed, observe_verdicts=self.observe_verdicts)

    def filter(self, spec: Optional[str]) -> Optional[Filter]:
        return load_filter(spec, self.monitor_taus) if spec else None

def resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("MDPI_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"MDPI_SEED debe ser un entero, se obtuvo '{env}'")
    return 0

def parse_assignments(items: Optional[List[str]], flag: str, convert=str) -> Dict[str, object]:
    result = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key or not value:
            raise ValueError(f"{flag} espera NOMBRE=VALOR, se obtuvo '{item}'")
        try:
            result[key] = convert(value)
        except ValueError:
            raise ValueError(f"{flag}: valor inválido '{value}' para {key}")
    return result

def build_placement(args: argparse.Namespace, clocks: Dict[str, int]) -> Placement:
    combs, bifurcs = {}, {}
    for node, location in parse_assignments(args.place, "--place").items():
        target, _, part = node.partition(".")
        if part not in ("", "comb", "bifurc"):
            raise ValueError(f"--place: parte desconocida '{part}' (use comb o bifurc)")
        if part in ("", "comb"):
            combs[target] = loc(location)
        if part in ("", "bifurc"):
            bifurcs[target] = loc(location)
    return Placement(central=loc(args.central) if args.central else None,
                     start=loc(args.start) if args.start else None,
                     combs=combs, bifurcs=bifurcs, ctx_init=args.ctx_init,
                     clocks=clocks, align=not args.no_align)

def load_config(compiler: MonitorCompiler, path: str, clocks: Dict[str, int]) -> Config:
    system = compiler.load_system(read_source(path))
    return initial_config(system, clocks)

def label_with(selected: Optional[Filter]):
    if selected is None:
        return str

    def label(action):
        image = apply_filter(selected, action)
        return None if image is None else str(image)
    return label

def emit(run: RunConfig, text: str):
    if run.output:
        Path(run.output).write_text(text, encoding="utf-8")
        print(f"✓ Resultado escrito en {run.output}")
    else:
        sys.stdout.write(text)

def dump_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

def format_logs(config: Config) -> List[str]:
    lines = []
    for location, entries in sorted(trace_logs(config).items()):
        records = ", ".join(f"{e.channel.text}<{','.join(v.text for v in e.values)}>@{e.timestamp}"
                            for e in entries)
        lines.append(f"  {location}: {records}")
    verdicts = ", ".join(f"{v.value}@{l}" for l, v in config.verdicts) or "ninguno"
    lines.append(f"  veredictos: {verdicts}")
    return lines

# Comandos

def cmd_explore(args, run: RunConfig) -> int:
    compiler = MonitorCompiler()
    config = load_config(compiler, args.system, run.clocks)
    selected = run.filter(args.filter)
    lts = explore(config, run.bounds, run.step_options())
    label = label_with(selected)

    if run.output_format == "json":
        emit(run, dump_json(lts.to_json(label)))
    elif run.output_format == "dot":
        emit(run, lts.to_dot(label))

    terminals = terminal_states(lts)
    trace_sets = sorted({trace_signature(lts.config(s)) for s in terminals}, key=repr)
    verdicts = sorted({f"{v.value}@{l}" for s in lts.states for l, v in lts.config(s).verdicts})
    summary = [
        f"estados: {lts.number_of_states()}",
        f"transiciones: {lts.number_of_edges()}",
        f"truncado: {'sí' if lts.truncated else 'no'}",
        f"estados terminales: {len(terminals)}",
        f"conjuntos de trazas terminales: {len(trace_sets)}",
    ]
    for signature in trace_sets:
        parts = []
        for location, entries in signature:
            parts.append(f"{location}: " + ", ".join(f"{c}<{','.join(vs)}>@{t}" for c, vs, t in entries))
        summary.append("  " + ("; ".join(parts) or "(vacío)"))
    summary.append(f"veredictos alcanzables: {', '.join(verdicts) or 'ninguno'}")
    out = sys.stderr if run.output_format != "text" and not run.output else sys.stdout
    print("\n".join(summary), file=out)
    return EXIT_OK

def cmd_check(args, run: RunConfig) -> int:
    compiler = MonitorCompiler()
    config_a = load_config(compiler, args.system_a, run.clocks)
    config_b = load_config(compiler, args.system_b, run.clocks)
    filter_a = run.filter(args.filter_a or args.filter or "ntg")
    filter_b = run.filter(args.filter_b or args.filter or "ntg")

    universe = None if run.closed else default_universe(config_a, config_b)
    lts_a = explore(config_a, run.bounds, run.step_options(universe))
    lts_b = explore(config_b, run.bounds, run.step_options(universe))
    result = check_weak_bisim(filter_graph(lts_a, filter_a), filter_graph(lts_b, filter_b))

    if run.output_format == "json" or run.output:
        emit(run, dump_json(result.to_dict()))
    if result.verdict == Verdict.BISIMILAR:
        print(f"✓ bisimilares ({len(result.relation)} pares en la relación)")
    elif result.verdict == Verdict.INCONCLUSIVE:
        print("? inconcluso: la exploración fue truncada")
    elif result.side is not None:
        trace = " ".join(str(a) for a in result.trace)
        print(f"✗ distinguibles: la traza [{trace}] solo la ejecuta el sistema {result.side.upper()}")
    elif result.attack is not None:
        attack = result.attack
        print(f"✗ distinguibles: el sistema {attack.side.upper()} juega {attack.action} hacia el estado "
              f"{attack.target} y ninguna respuesta queda en su bloque")
    else:
        print("✗ distinguibles")
    return BISIM_EXIT[result.verdict]

def cmd_simulate(args, run: RunConfig) -> int:
    compiler = MonitorCompiler()
    config = load_config(compiler, args.system, run.clocks)
    report = simulate(config, args.steps, run.seed, run.step_options(), run.bounds,
                      halt_on_first_fail=args.halt_on_first_fail)
    if run.output_format == "json":
        emit(run, dump_json({
            "seed": run.seed,
            "steps": [{"action": a.to_dict(), "label": str(a)} for a, _ in report.steps],
            "final": report.final.to_dict(),
            "halted_on_fail": report.halted_on_fail,
        }))
        return EXIT_OK
    lines = [f"semilla: {run.seed}", f"pasos: {len(report.steps)}"]
    lines.extend(f"  {i + 1}. {a}" for i, (a, _) in enumerate(report.steps))
    lines.append("trazas finales:")
    lines.extend(format_logs(report.final))
    emit(run, "\n".join(lines) + "\n")
    return EXIT_OK

def cmd_compile(args, run: RunConfig) -> int:
    compiler = MonitorCompiler()
    placement = build_placement(args, run.clocks)
    text = compiler.compile(read_source(args.contract), args.strategy, placement, args.nested)
    emit(run, text)
    return EXIT_OK

def cmd_verify_contract(args, run: RunConfig) -> int:
    compiler = MonitorCompiler()
    contract = compiler.load_contract(read_source(args.contract))
    config = load_config(compiler, args.system, run.clocks)
    placement = build_placement(args, run.clocks)
    strategies = list(STRATEGIES) if args.strategy == "all" else [args.strategy]

    unsound = False
    distinguished = False
    reachability = {}
    graphs: Dict[str, LtsGraph] = {}
    missing = placement.locations(contract) - system_locations(config.system) - set(run.clocks)
    if missing:
        logger.warning("Ubicaciones sin reloj inicial (se usa 0): %s", ", ".join(sorted(missing)))
    for strategy in strategies:
        monitor = compiler.compile_term(contract, strategy, placement, args.nested and strategy == "mig")
        composed = initial_config(Par(config.system, monitor), run.clocks)
        lts = explore(composed, run.bounds, run.step_options())
        graphs[strategy] = lts
        fails = fail_states(lts)
        report = check_soundness(lts, contract)
        reachability[strategy] = bool(fails)
        status = "alcanzable" if fails else "inalcanzable"
        print(f"{strategy}: fail {status}; {lts.number_of_states()} estados"
              f"{' (truncado)' if lts.truncated else ''}")
        if report.sound:
            print(f"  ✓ oráculo de acuerdo en {report.checked} estados de fallo")
        else:
            unsound = True
            print(f"  ✗ veredicto sin traza que lo justifique en estados {report.unsound}")

    if len(strategies) > 1:
        if len(set(reachability.values())) > 1:
            unsound = True
            print("✗ las estrategias no coinciden en la alcanzabilidad de fail")
        else:
            print("✓ las estrategias coinciden en la alcanzabilidad de fail")
        ntg = builtin_filter("ntg")
        reference = strategies[0]
        for strategy in strategies[1:]:
            result = check_weak_bisim(filter_graph(graphs[reference], ntg), filter_graph(graphs[strategy], ntg))
            print(f"  {reference} ≈ {strategy}: {result.verdict.value}")
            distinguished = distinguished or result.verdict == Verdict.DISTINGUISHED
    if unsound:
        return EXIT_UNSOUND
    return EXIT_DISTINGUISHED if distinguished else EXIT_OK

COMMANDS = {
    "explore": cmd_explore,
    "check": cmd_check,
    "simulate": cmd_simulate,
    "compile": cmd_compile,
    "verify-contract": cmd_verify_contract,
}

# Análisis de argumentos

def add_run_options(parser: argparse.ArgumentParser):
    parser.add_argument("--max-unfold", type=int, default=3, help="Desdoblamientos por replicación")
    parser.add_argument("--max-trace", type=int, default=8, help="Entradas de traza por ubicación")
    parser.add_argument("--max-states", type=int, default=20000, help="Estados explorados como máximo")
    parser.add_argument("--clock", nargs="*", metavar="LOC=N", help="Reloj inicial por ubicación")
    parser.add_argument("--closed", action="store_true", help="Solo pasos internos")
    parser.add_argument("--observe-verdicts", action="store_true",
                        help="ok/fail producen salidas observables")
    parser.add_argument("--ltr-monitor-taus", choices=("tau", "drop"), default="tau",
                        help="Tratamiento de pasos silenciosos remotos de monitores bajo ltr")
    parser.add_argument("--format", choices=("text", "json", "dot"), default="text")
    parser.add_argument("-o", "--output", metavar="FILE", help="Archivo de salida")

def add_compile_options(parser: argparse.ArgumentParser, strategies):
    parser.add_argument("--strategy", choices=strategies, default="orch")
    parser.add_argument("--nested", action="store_true", help="Migración anidada (solo secuencias)")
    parser.add_argument("--central", metavar="LOC", help="Ubicación central")
    parser.add_argument("--start", metavar="LOC", help="Ubicación de la señal de inicio")
    parser.add_argument("--place", nargs="*", metavar="NODO=LOC", help="Ubicación de comb/bifurc")
    parser.add_argument("--ctx-init", choices=("literal", "clock"), default="literal")
    parser.add_argument("--no-align", action="store_true", help="Sin sync tras cada go")

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Exploración, equivalencia y compilación de monitores distribuidos",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Códigos de salida:
  0  éxito / bisimilares      1  distinguibles
  2  inconcluso (truncado)    3  error de entrada
  4  desacuerdo con el oráculo
        """
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Registro detallado")
    commands = parser.add_subparsers(dest="command", required=True)

    explore_cmd = commands.add_parser("explore", help="Construye el LTS acotado de un sistema")
    explore_cmd.add_argument("system")
    explore_cmd.add_argument("--filter", help="ntg, prc, ltr o archivo JSON")
    add_run_options(explore_cmd)

    check_cmd = commands.add_parser("check", help="Decide bisimilitud débil")
    check_cmd.add_argument("system_a")
    check_cmd.add_argument("system_b")
    check_cmd.add_argument("--filter", help="Filtro para ambos lados (por defecto ntg)")
    check_cmd.add_argument("--filter-a")
    check_cmd.add_argument("--filter-b")
    add_run_options(check_cmd)

    simulate_cmd = commands.add_parser("simulate", help="Ejecuta un camino aleatorio")
    simulate_cmd.add_argument("system")
    simulate_cmd.add_argument("--steps", type=int, default=100)
    simulate_cmd.add_argument("--seed", type=int, help="Semilla (o MDPI_SEED)")
    simulate_cmd.add_argument("--scheduler", choices=("uniform-random",), default="uniform-random")
    simulate_cmd.add_argument("--halt-on-first-fail", action="store_true")
    add_run_options(simulate_cmd)

    compile_cmd = commands.add_parser("compile", help="Compila un contrato a un monitor")
    compile_cmd.add_argument("contract")
    add_compile_options(compile_cmd, STRATEGIES)
    add_run_options(compile_cmd)

    verify_cmd = commands.add_parser("verify-contract", help="Compila, compone y contrasta con el oráculo")
    verify_cmd.add_argument("contract")
    verify_cmd.add_argument("system")
    add_compile_options(verify_cmd, STRATEGIES + ("all",))
    add_run_options(verify_cmd)
    return parser

def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        run = RunConfig.from_args(args)
        return COMMANDS[args.command](args, run)
    except (CompilerError, CompileError, FilterError, ValueError) as e:
        print(f"✗ Error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR

if __name__ == "__main__":
    sys.exit(main())
