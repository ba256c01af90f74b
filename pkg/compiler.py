import logging
from pathlib import Path
from typing import Iterable, Optional

from ast_nodes import ContractExpr, Term
from contract_compiler import CompileError, Placement, compile_contract
from lexer import LexerError
from parser import ParseError, parse_contract, parse_system
from printer import pretty
from scope_analyzer import ScopeAnalyzer, SubstitutionError

logger = logging.getLogger(__name__)

class CompilerError(Exception):
    pass

class MonitorCompiler:
    """Pipeline de texto de contrato a texto de sistema monitor."""

    def __init__(self):
        self.scope_analyzer = ScopeAnalyzer()

    def load_system(self, text: str, extra_locations: Iterable[str] = ()) -> Term:
        """Parsea y valida un sistema."""
        try:
            system = parse_system(text, extra_locations)
        except (ParseError, LexerError) as e:
            raise CompilerError(f"Error de sintaxis: {e}") from e
        errors = self.scope_analyzer.analyze(system)
        if errors:
            raise CompilerError("Errores de alcance encontrados:\n" + "\n".join(errors))
        return system

    def load_contract(self, text: str) -> ContractExpr:
        try:
            return parse_contract(text)
        except (ParseError, LexerError) as e:
            raise CompilerError(f"Error de sintaxis en el contrato: {e}") from e

    def compile_term(self, contract: ContractExpr, strategy: str,
                     placement: Optional[Placement] = None, nested: bool = False) -> Term:
        try:
            logger.info("Fase 2: Compilación con estrategia %s...", strategy)
            monitor = compile_contract(contract, strategy, placement, nested)
        except (CompileError, SubstitutionError) as e:
            raise CompilerError(f"Error de compilación: {e}") from e

        logger.info("Fase 3: Análisis de alcance...")
        errors = self.scope_analyzer.analyze(monitor)
        if errors:
            raise CompilerError("Monitor mal formado:\n" + "\n".join(errors))
        return monitor

    def compile(self, contract_text: str, strategy: str, placement: Optional[Placement] = None,
                nested: bool = False) -> str:
        """Compila un contrato a un sistema monitor en la gramática concreta."""
        logger.info("Fase 1: Análisis sintáctico del contrato...")
        contract = self.load_contract(contract_text)
        monitor = self.compile_term(contract, strategy, placement, nested)
        logger.info("Fase 4: Impresión del monitor...")
        return pretty(monitor) + "\n"

    def compile_file(self, input_file: str, output_file: str, strategy: str,
                     placement: Optional[Placement] = None, nested: bool = False):
        try:
            text = Path(input_file).read_text(encoding="utf-8")
        except FileNotFoundError as e:
            raise CompilerError(f"Archivo no encontrado: {input_file}") from e
        Path(output_file).write_text(self.compile(text, strategy, placement, nested), encoding="utf-8")
        logger.info("Compilación exitosa: %s -> %s", input_file, output_file)

def read_source(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise CompilerError(f"Archivo no encontrado: {path}") from e
    except OSError as e:
        raise CompilerError(f"No se pudo leer {path}: {e}") from e
