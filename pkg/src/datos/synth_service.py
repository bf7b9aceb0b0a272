# -*- coding: utf-8 -*-
"""
Generador de Cohortes Sintéticas.

Genera candidatos a partir de una mezcla de componentes, cada uno descrito
por distribuciones marginales (bandas de edad, proporción de mujeres, bandas
de nota, relación del empleo, carrera y diploma). Dentro de un componente los
atributos se sortean de forma independiente y los valores se distribuyen
uniformemente dentro de cada banda.

La mezcla por defecto transcribe los tres perfiles observados en los
candidatos del curso modular (edad 25-31 con mayoría de hombres; 17-25 con
mayoría de mujeres y notas altas; 31-59 con empleo relacionado).
"""

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from config.config import ALGORITMO_RNG
from src.datos.esquema import (
    CATALOGO_CARRERAS,
    COLUMNA_COHORTE,
    COLUMNA_ID,
    ESQUEMA_BASE,
    Dataset,
    Procedencia,
)
from src.utils.exceptions import MezclaInvalidaError
from src.utils.logger import configurar_logger
from src.utils.settings_manager import SettingsManager

logger = configurar_logger(__name__)

TOLERANCIA = 1e-9

Banda = tuple[float, float]


@dataclass(frozen=True)
class ComponentSpec:
    peso: float
    bandas_edad: tuple[tuple[Banda, float], ...]
    p_mujer: float
    bandas_nota: tuple[tuple[Banda, float], ...]
    p_empleado: float
    probs_relevancia: tuple[float, float, float]
    dist_carrera: tuple[tuple[str, float], ...]
    dist_diploma: tuple[tuple[str, float], ...]

    @classmethod
    def desde_dict(cls, d: dict) -> "ComponentSpec":
        try:
            return cls(
                peso=float(d["peso"]),
                bandas_edad=tuple((tuple(b), float(p)) for b, p in d["bandas_edad"]),
                p_mujer=float(d["p_mujer"]),
                bandas_nota=tuple((tuple(b), float(p)) for b, p in d["bandas_nota"]),
                p_empleado=float(d["p_empleado"]),
                probs_relevancia=tuple(float(p) for p in d["probs_relevancia"]),
                dist_carrera=tuple((str(c), float(p)) for c, p in d["dist_carrera"]),
                dist_diploma=tuple((str(c), float(p)) for c, p in d["dist_diploma"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise MezclaInvalidaError(f"Componente mal formado: {e}") from e


_BANDAS_EDAD = ((17, 25), (25, 31), (31, 60))
# El perfil mayor se concentra en la treintena: 77% entre 31 y 59 años repartido en dos bandas
_BANDAS_EDAD_MAYOR = ((17, 25), (25, 31), (31, 40), (40, 60))
_BANDAS_NOTA = ((10.0, 12.0), (12.0, 13.0), (13.0, 15.0), (15.0, 17.0), (17.0, 20.0))


def _bandas(bandas, probs) -> tuple:
    return tuple(zip(bandas, probs))


MEZCLA_DEFECTO: tuple[ComponentSpec, ...] = (
    # Componente 1: ~72% entre 25 y 31 años, >90% hombres, nota 13-15, desempleado o empleo no relacionado
    ComponentSpec(
        peso=0.30,
        bandas_edad=_bandas(_BANDAS_EDAD, (0.14, 0.72, 0.14)),
        p_mujer=0.04,
        bandas_nota=_bandas(_BANDAS_NOTA, (0.05, 0.10, 0.60, 0.20, 0.05)),
        p_empleado=0.96,
        probs_relevancia=(0.04, 0.02, 0.94),
        dist_carrera=(
            ("Car Quality Control & Machine Tools", 0.30), ("Software", 0.20), ("IT", 0.15),
            ("Accounting- Industrial", 0.15), ("Financial Services in Trade Units", 0.10),
            ("Graphic", 0.05), ("Agronomy", 0.05),
        ),
        dist_diploma=(
            ("Job and Knowledge", 0.35), ("Technical & Professional", 0.35), ("Math-Physics", 0.15),
            ("Human Sciences", 0.10), ("Art", 0.05),
        ),
    ),
    # Componente 2: ~78% entre 17 y 25 años, ~74% mujeres, más de la mitad con nota > 15, desempleadas
    ComponentSpec(
        peso=0.30,
        bandas_edad=_bandas(_BANDAS_EDAD, (0.78, 0.14, 0.08)),
        p_mujer=0.74,
        bandas_nota=_bandas(_BANDAS_NOTA, (0.03, 0.07, 0.30, 0.40, 0.20)),
        p_empleado=0.04,
        probs_relevancia=(0.96, 0.02, 0.02),
        dist_carrera=(
            ("Software", 0.30), ("Graphic", 0.20), ("IT", 0.20), ("Accounting- Industrial", 0.15),
            ("Financial Services in Trade Units", 0.05), ("Car Quality Control & Machine Tools", 0.05),
            ("Agronomy", 0.05),
        ),
        dist_diploma=(
            ("Math-Physics", 0.40), ("Human Sciences", 0.25), ("Art", 0.20),
            ("Technical & Professional", 0.10), ("Job and Knowledge", 0.05),
        ),
    ),
    # Componente 3: ~77% entre 31 y 59 años (sobre todo 31-40), mayoría de mujeres, empleo relacionado, 68% con nota 12-15
    ComponentSpec(
        peso=0.40,
        bandas_edad=_bandas(_BANDAS_EDAD_MAYOR, (0.115, 0.115, 0.60, 0.17)),
        p_mujer=0.90,
        bandas_nota=_bandas(_BANDAS_NOTA, (0.12, 0.28, 0.40, 0.15, 0.05)),
        p_empleado=0.98,
        probs_relevancia=(0.02, 0.96, 0.02),
        dist_carrera=(
            ("Financial Services in Trade Units", 0.25), ("Accounting- Industrial", 0.25),
            ("Car Quality Control & Machine Tools", 0.15), ("IT", 0.15), ("Agronomy", 0.10),
            ("Software", 0.05), ("Graphic", 0.05),
        ),
        dist_diploma=(
            ("Job and Knowledge", 0.30), ("Technical & Professional", 0.30), ("Human Sciences", 0.20),
            ("Math-Physics", 0.15), ("Art", 0.05),
        ),
    ),
)


# --- Validación ---

def _validar_distribucion(probs, nombre: str, i: int):
    probs = list(probs)
    if not probs:
        raise MezclaInvalidaError(f"Componente {i}: '{nombre}' está vacía.")
    if any(p < 0 or p > 1 for p in probs):
        raise MezclaInvalidaError(f"Componente {i}: '{nombre}' tiene probabilidades fuera de [0, 1].")
    if abs(sum(probs) - 1.0) > TOLERANCIA:
        raise MezclaInvalidaError(f"Componente {i}: '{nombre}' suma {sum(probs)}, se esperaba 1.")


def validar_mezcla(mix) -> None:
    """Valida la mezcla completa antes de generar cualquier fila."""
    if not mix:
        raise MezclaInvalidaError("La mezcla no tiene componentes.")
    for i, c in enumerate(mix):
        if not (0 < c.peso <= 1):
            raise MezclaInvalidaError(f"Componente {i}: peso {c.peso} fuera de (0, 1].")
        _validar_distribucion([p for _, p in c.bandas_edad], "bandas_edad", i)
        _validar_distribucion([p for _, p in c.bandas_nota], "bandas_nota", i)
        _validar_distribucion(c.probs_relevancia, "probs_relevancia", i)
        _validar_distribucion([p for _, p in c.dist_carrera], "dist_carrera", i)
        _validar_distribucion([p for _, p in c.dist_diploma], "dist_diploma", i)
        if len(c.probs_relevancia) != 3:
            raise MezclaInvalidaError(f"Componente {i}: probs_relevancia debe tener 3 valores (0, 1, 2).")
        for nombre, p in (("p_mujer", c.p_mujer), ("p_empleado", c.p_empleado)):
            if not (0 <= p <= 1):
                raise MezclaInvalidaError(f"Componente {i}: {nombre} fuera de [0, 1].")
        if abs(c.probs_relevancia[0] - (1 - c.p_empleado)) > TOLERANCIA:
            raise MezclaInvalidaError(
                f"Componente {i}: la masa de relevancia 0 ({c.probs_relevancia[0]}) debe igualar "
                f"la masa de desempleo ({1 - c.p_empleado})."
            )
        for (lo, hi), _ in c.bandas_edad:
            if not (17 <= lo < hi) or int(lo) != lo or int(hi) != hi:
                raise MezclaInvalidaError(f"Componente {i}: banda de edad inválida ({lo}, {hi}).")
        for (lo, hi), _ in c.bandas_nota:
            if not (0 <= lo < hi <= 20):
                raise MezclaInvalidaError(f"Componente {i}: banda de nota inválida ({lo}, {hi}).")
        desconocidas = [carrera for carrera, _ in c.dist_carrera if carrera not in CATALOGO_CARRERAS]
        if desconocidas:
            raise MezclaInvalidaError(f"Componente {i}: carreras fuera del catálogo: {desconocidas}")
    total = sum(c.peso for c in mix)
    if abs(total - 1.0) > TOLERANCIA:
        raise MezclaInvalidaError(f"Los pesos de la mezcla suman {total}, se esperaba 1.")


# --- Generación ---

def _sortear_bandas(rng: np.random.Generator, bandas, m: int) -> tuple[np.ndarray, np.ndarray]:
    limites = np.array([b for b, _ in bandas], dtype=float)
    elegidas = rng.choice(len(bandas), size=m, p=[p for _, p in bandas])
    return limites[elegidas, 0], limites[elegidas, 1]


def _sortear_categoria(rng: np.random.Generator, dist, m: int) -> np.ndarray:
    valores = np.array([v for v, _ in dist], dtype=object)
    return valores[rng.choice(len(dist), size=m, p=[p for _, p in dist])]


def generate_cohort(
    mix, n: int, seed: int, cohort_year: int
) -> tuple[Dataset, pd.DataFrame]:
    """
    Genera exactamente n candidatos de la mezcla.

    Devuelve el Dataset y la verdad de terreno (id, component). La misma
    combinación (mezcla, n, semilla) produce siempre la misma salida.
    """
    validar_mezcla(mix)
    if n < 0:
        raise MezclaInvalidaError(f"n debe ser >= 0 (recibido {n}).")

    rng = np.random.Generator(getattr(np.random, ALGORITMO_RNG)(seed))
    pesos = np.array([c.peso for c in mix], dtype=float)
    componentes = rng.choice(len(mix), size=n, p=pesos / pesos.sum())

    edad = np.zeros(n, dtype=np.int64)
    nota = np.zeros(n, dtype=float)
    genero = np.empty(n, dtype=object)
    relevancia = np.zeros(n, dtype=np.int64)
    carrera = np.empty(n, dtype=object)
    diploma = np.empty(n, dtype=object)

    for c, spec in enumerate(mix):
        idx = np.flatnonzero(componentes == c)
        m = len(idx)
        if m == 0:
            continue
        lo, hi = _sortear_bandas(rng, spec.bandas_edad, m)
        edad[idx] = rng.integers(lo.astype(np.int64), hi.astype(np.int64))
        genero[idx] = np.where(rng.random(m) < spec.p_mujer, "Female", "Male")
        lo, hi = _sortear_bandas(rng, spec.bandas_nota, m)
        nota[idx] = np.floor((lo + rng.random(m) * (hi - lo)) * 100) / 100
        relevancia[idx] = rng.choice(3, size=m, p=list(spec.probs_relevancia))
        carrera[idx] = _sortear_categoria(rng, spec.dist_carrera, m)
        diploma[idx] = _sortear_categoria(rng, spec.dist_diploma, m)

    ids = [f"S{cohort_year}-{i:06d}" for i in range(n)]
    filas = pd.DataFrame({
        COLUMNA_ID: pd.Series(ids, dtype=object),
        "gender": pd.Series(genero, dtype=object),
        "grade": pd.Series(nota, dtype="float64"),
        "age": pd.Series(edad, dtype="Int64"),
        "diploma": pd.Series(diploma, dtype=object),
        "employment": pd.Series(np.where(relevancia == 0, "Unemployed", "Employed"), dtype=object),
        "job_relevancy": pd.Series(relevancia.astype(str), dtype=object),
        "field_group": pd.Series([CATALOGO_CARRERAS[c] for c in carrera], dtype=object),
        "field": pd.Series(carrera, dtype=object),
        COLUMNA_COHORTE: pd.Series(np.full(n, cohort_year), dtype="int64"),
    })
    verdad = pd.DataFrame({
        COLUMNA_ID: pd.Series(ids, dtype=object),
        "component": pd.Series(componentes, dtype="int64"),
    })

    nota_log = f"cohorte sintética: n={n}, semilla={seed}, año={cohort_year}, rng={ALGORITMO_RNG}"
    logger.info(nota_log)
    return Dataset(ESQUEMA_BASE, filas, Procedencia("sintético", (nota_log,))), verdad


# --- Archivos de mezcla ---

def mezcla_a_dict(mix) -> dict:
    return {"componentes": [asdict(c) for c in mix]}


def cargar_mezcla(ruta: Path | str | None):
    """Lee una mezcla desde un archivo JSON de claves; sin archivo devuelve la mezcla por defecto."""
    if ruta is None:
        return MEZCLA_DEFECTO
    gestor = SettingsManager(ruta, defaults=mezcla_a_dict(MEZCLA_DEFECTO))
    mezcla = tuple(ComponentSpec.desde_dict(d) for d in gestor.get_setting("componentes"))
    validar_mezcla(mezcla)
    return mezcla
