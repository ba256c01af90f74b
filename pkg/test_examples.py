#!/usr/bin/env python3
"""
Ejemplos de contratos para el compilador de monitores
"""
import pytest

from compiler import CompilerError, MonitorCompiler
from contract_compiler import STRATEGIES
from parser import parse_system

# Ejemplo 1: Evento único
def ejemplo_evento():
    return '''
(login, ())@srv
'''

# Ejemplo 2: Secuencia entre ubicaciones
def ejemplo_secuencia():
    return '''
# pedido en el cliente y confirmación en el servidor
(order, item)@cli . (confirm, item)@srv
'''

# Ejemplo 3: Elección
def ejemplo_eleccion():
    return '''
(pay, card)@cli + (pay, cash)@cli
'''

# Ejemplo 4: Repetición
def ejemplo_repeticion():
    return '''
((retry, ())@cli)* . (abort, ())@srv
'''

# Ejemplo 5: Suma generalizada
def ejemplo_suma():
    return '''
sum d in {d1, d2} (withhold, p1)@d . (send, p1)@h
'''

# Ejemplo 6: Eventos con varios valores
def ejemplo_valores():
    return '''
(move, a, b)@l . (move, b, a)@k
'''

EJEMPLOS = [
    ("Evento único", ejemplo_evento()),
    ("Secuencia entre ubicaciones", ejemplo_secuencia()),
    ("Elección", ejemplo_eleccion()),
    ("Repetición", ejemplo_repeticion()),
    ("Suma generalizada", ejemplo_suma()),
    ("Eventos con varios valores", ejemplo_valores()),
]

@pytest.mark.parametrize("nombre,contrato", EJEMPLOS, ids=[n for n, _ in EJEMPLOS])
@pytest.mark.parametrize("estrategia", STRATEGIES)
def test_ejemplo_compila(nombre, contrato, estrategia):
    texto = MonitorCompiler().compile(contrato, estrategia)
    parse_system(texto)

@pytest.mark.parametrize("nombre,contrato", [EJEMPLOS[1], EJEMPLOS[5]])
def test_ejemplo_migracion_anidada(nombre, contrato):
    texto = MonitorCompiler().compile(contrato, "mig", nested=True)
    assert "go" in texto and "fail" in texto

def test_ejemplo_eleccion_sin_migracion_anidada():
    with pytest.raises(CompilerError):
        MonitorCompiler().compile(ejemplo_eleccion(), "mig", nested=True)

def ejecutar_pruebas():
    """Ejecuta todas las pruebas de ejemplo"""
    compiler = MonitorCompiler()

    print("=== EJECUTANDO PRUEBAS DEL COMPILADOR DE MONITORES ===\n")

    for i, (nombre, contrato) in enumerate(EJEMPLOS, 1):
        for estrategia in STRATEGIES:
            print(f"Prueba {i}: {nombre} ({estrategia})")
            print("-" * 50)

            try:
                monitor = compiler.compile(contrato, estrategia)
                print("✓ COMPILACIÓN EXITOSA")
                print("\nMonitor generado:")
                print(monitor)

            except CompilerError as e:
                print(f"✗ ERROR DE COMPILACIÓN: {e}")

            print("\n" + "=" * 70 + "\n")

if __name__ == "__main__":
    ejecutar_pruebas()
