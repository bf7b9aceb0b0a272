# -*- coding: utf-8 -*-
"""
Configuración global de Pytest (conftest.py).

Fixtures compartidos: CSVs y datasets pequeños armados a mano, la cohorte
sintética por defecto y el juego de seis reglas del primer modelo de
predicción de carrera.
"""

import pandas as pd
import pytest

from src.datos.esquema import COLUMNA_COHORTE, COLUMNA_ID, Atributo, Dataset
from src.datos.synth_service import MEZCLA_DEFECTO, generate_cohort
from src.logic.rules_engine import Condicion, Rule, RuleSet

CABECERA = "id,gender,grade,age,diploma,employment,job_relevancy,field_group,field,cohort_year"

# Bandas de nota usadas por las reglas publicadas
BANDAS_NOTA = ("0-12.7", "12.7-14.8", "14.8-16.3", "16.3-20")


def fila_csv(**cambios) -> str:
    """Una fila CSV válida; los cambios reemplazan columnas puntuales."""
    base = {
        "id": "A1", "gender": "M", "grade": "14", "age": "28", "diploma": "Math-Physics",
        "employment": "Employed", "job_relevancy": "1", "field_group": "Industry",
        "field": "IT", "cohort_year": "2008",
    }
    base.update({k: str(v) for k, v in cambios.items()})
    return ",".join(base[c] for c in CABECERA.split(","))


def csv_de(*filas: str) -> str:
    return "\n".join([CABECERA, *filas]) + "\n"


def dataset_categorico(filas: list[dict], cohorte: int = 2008) -> Dataset:
    """Dataset totalmente categórico (vista discretizada) a partir de una lista de dicts."""
    columnas = list(filas[0].keys()) if filas else []
    df = pd.DataFrame(filas, columns=columnas).astype(str)
    df.insert(0, COLUMNA_ID, [f"r{i}" for i in range(len(df))])
    df[COLUMNA_COHORTE] = cohorte
    return Dataset(tuple(Atributo(c, "categorico") for c in columnas), df)


def dataset_mixto(continuos: dict[str, list[float]], categoricos: dict[str, list[str]] | None = None) -> Dataset:
    """Dataset con atributos continuos y categóricos dados por columnas."""
    categoricos = categoricos or {}
    n = len(next(iter({**continuos, **categoricos}.values())))
    df = pd.DataFrame({COLUMNA_ID: [f"r{i}" for i in range(n)]})
    esquema = []
    for nombre, valores in continuos.items():
        df[nombre] = pd.Series(valores, dtype="float64")
        esquema.append(Atributo(nombre, "continuo"))
    for nombre, valores in categoricos.items():
        df[nombre] = pd.Series([str(v) for v in valores], dtype=object)
        esquema.append(Atributo(nombre, "categorico"))
    df[COLUMNA_COHORTE] = 2008
    return Dataset(tuple(esquema), df)


@pytest.fixture
def csv_valido() -> str:
    return csv_de(fila_csv())


@pytest.fixture(scope="session")
def cohorte_sintetica():
    """Cohorte de 600 candidatos de la mezcla por defecto (semilla fija)."""
    return generate_cohort(MEZCLA_DEFECTO, 600, 7, 2008)


def _regla(condiciones: dict[str, tuple[str, ...]], carrera: str) -> Rule:
    lhs = tuple(Condicion(a, frozenset(v)) for a, v in condiciones.items())
    return Rule(lhs, ("field", carrera), support=0.05, confidence=0.8)


@pytest.fixture
def reglas_publicadas() -> RuleSet:
    """
    Las seis reglas publicadas del modelo de carrera. Los intervalos de nota se
    expresan como conjuntos de bandas (">12.7" = todas las bandas por encima);
    el "-" de la regla 6 es un atributo sin restricción. No se publicaron
    soporte ni confianza, así que todas comparten los mismos valores.
    """
    sobre_12_7 = BANDAS_NOTA[1:]
    reglas = [
        _regla({"gender": ("Female",), "grade": ("14.8-16.3",), "diploma": ("Math-Physics",),
                "job_relevancy": ("0",)}, "Software"),
        _regla({"gender": ("Male",), "grade": sobre_12_7, "diploma": ("Job and Knowledge",),
                "job_relevancy": ("2",)}, "Car Quality Control & Machine Tools"),
        _regla({"gender": ("Male",), "grade": ("0-12.7",), "diploma": ("Technical & Professional",),
                "job_relevancy": ("1",)}, "Financial Services in Trade Units"),
        _regla({"gender": ("Female",), "grade": ("14.8-16.3",), "diploma": ("Art",),
                "job_relevancy": ("0",)}, "Graphic"),
        _regla({"gender": ("Male",), "grade": ("0-12.7",), "diploma": ("Human Sciences",),
                "job_relevancy": ("0",)}, "Accounting- Industrial"),
        _regla({"gender": ("Male",), "diploma": ("Job and Knowledge",), "job_relevancy": ("2",)}, "Software"),
    ]
    return RuleSet.ordenado(reglas, objetivo="field", clase_defecto="IT", prior_defecto=0.2)
