# -*- coding: utf-8 -*-
"""
Similitud entre dos clusterings del mismo dataset: índices de Rand, Jaccard y ADCO.

Rand y Jaccard se calculan por conteo de pares a partir de la tabla de
contingencia (aritmética entera). ADCO compara perfiles de densidad por
atributo y bin, maximizando el término cruzado sobre correspondencias de
clusters.
"""

from dataclasses import dataclass
from itertools import permutations

import numpy as np
import pandas as pd
from scipy.optimize import linear_sum_assignment

from config.config import ADCO_BINS, ADCO_MAX_K_EXHAUSTIVO
from src.datos.esquema import Dataset
from src.logic.cluster_engine import Clustering
from src.utils.exceptions import ComparacionError
from src.utils.logger import configurar_logger

logger = configurar_logger(__name__)


@dataclass(frozen=True)
class PairCounts:
    a: int  # mismo cluster en ambos
    b: int  # mismo cluster solo en el primero
    c: int  # mismo cluster solo en el segundo
    d: int  # distinto cluster en ambos

    @property
    def total(self) -> int:
        return self.a + self.b + self.c + self.d


def _alinear(c1: Clustering, c2: Clustering) -> tuple[np.ndarray, np.ndarray]:
    """Devuelve las asignaciones de c2 reordenadas según las filas de c1."""
    if len(c1.ids) != len(c2.ids) or set(c1.ids) != set(c2.ids):
        raise ComparacionError("Los clusterings no cubren el mismo conjunto de filas.")
    if c1.ids == c2.ids:
        return c1.asignacion, c2.asignacion
    posicion = {i: p for p, i in enumerate(c2.ids)}
    orden = np.array([posicion[i] for i in c1.ids])
    return c1.asignacion, c2.asignacion[orden]


def _pares(x: int) -> int:
    return x * (x - 1) // 2


def pair_counts(c1: Clustering, c2: Clustering) -> PairCounts:
    x, y = _alinear(c1, c2)
    n = len(x)
    if n < 2:
        raise ComparacionError("Se necesitan al menos 2 filas para contar pares.")
    contingencia = pd.crosstab(x, y).to_numpy()
    a = sum(_pares(int(v)) for v in contingencia.ravel())
    mismos_1 = sum(_pares(int(v)) for v in contingencia.sum(axis=1))
    mismos_2 = sum(_pares(int(v)) for v in contingencia.sum(axis=0))
    b, c = mismos_1 - a, mismos_2 - a
    return PairCounts(a, b, c, _pares(n) - a - b - c)


def rand_index(c1: Clustering, c2: Clustering) -> float:
    p = pair_counts(c1, c2)
    return (p.a + p.d) / p.total


def jaccard_index(c1: Clustering, c2: Clustering) -> float:
    p = pair_counts(c1, c2)
    denominador = p.a + p.b + p.c
    # ambos clusterings todo-singletons
    if denominador == 0:
        return 1.0
    return p.a / denominador


# --- ADCO ---

def _bins_por_atributo(ds: Dataset, atributos, bins_per_attr: int) -> list[np.ndarray]:
    """Índice de bin por fila y atributo: igual ancho para continuos, un bin por nivel para categóricos."""
    columnas = []
    for nombre in atributos:
        serie = ds.filas[nombre]
        if ds.tipo_de(nombre) == "continuo":
            valores = serie.to_numpy(dtype=float)
            minimo, maximo = valores.min(), valores.max()
            if maximo == minimo:
                columnas.append((np.zeros(len(valores), dtype=np.int64), 1))
                continue
            ancho = (maximo - minimo) / bins_per_attr
            indices = np.minimum(((valores - minimo) // ancho).astype(np.int64), bins_per_attr - 1)
            columnas.append((indices, bins_per_attr))
        else:
            _, indices = np.unique(serie.astype(str).to_numpy(), return_inverse=True)
            columnas.append((indices.astype(np.int64), int(indices.max()) + 1))
    return columnas


def _densidades(asignacion: np.ndarray, k: int, columnas) -> np.ndarray:
    """Matriz (k x total de bins) con el conteo de filas de cada cluster en cada bin."""
    bloques = []
    for indices, n_bins in columnas:
        bloque = np.zeros((k, n_bins), dtype=np.int64)
        np.add.at(bloque, (asignacion, indices), 1)
        bloques.append(bloque)
    return np.hstack(bloques)


def _mejor_correspondencia(cruce: np.ndarray) -> int:
    k = cruce.shape[0]
    if k <= ADCO_MAX_K_EXHAUSTIVO:
        filas = range(k)
        return max(
            sum(int(cruce[i, pi]) for i, pi in zip(filas, perm)) for perm in permutations(range(k))
        )
    filas, columnas = linear_sum_assignment(cruce, maximize=True)
    return int(cruce[filas, columnas].sum())


def _atributos_comunes(c1: Clustering, c2: Clustering, ds: Dataset) -> list[str]:
    """Atributos declarados por ambos clusterings, en el orden del esquema; sin declaración, todos."""
    declarados = [set(c.atributos) for c in (c1, c2) if c.atributos]
    if not declarados:
        return list(ds.nombres)
    comunes = [a for a in ds.nombres if all(a in d for d in declarados)]
    if not comunes:
        raise ComparacionError("Los clusterings no comparten atributos del dataset: ADCO no tiene perfiles que comparar.")
    if len(declarados) == 2 and declarados[0] != declarados[1]:
        logger.warning(f"ADCO: atributos distintos en los clusterings; se usan los comunes {comunes}.")
    return comunes


def adco(c1: Clustering, c2: Clustering, ds: Dataset, bins_per_attr: int = ADCO_BINS, atributos=None) -> float:
    """
    ADCO = sim(c1, c2) / max(sim(c1, c1), sim(c2, c2)).

    sim(C, C') es el máximo sobre permutaciones π de Σ_i Σ_{j,b} dens(C,i,j,b)·dens(C',π(i),j,b);
    la autosimilitud usa la permutación identidad. El k menor se completa con clusters vacíos.
    """
    if ds.n == 0:
        raise ComparacionError("ADCO no está definido para un dataset vacío.")
    if bins_per_attr < 1:
        raise ComparacionError("bins_per_attr debe ser >= 1.")
    x, y = _alinear(c1, c2)
    if len(x) != ds.n or set(c1.ids) != set(ds.ids):
        raise ComparacionError("Los clusterings no corresponden a las filas del dataset.")
    if tuple(ds.ids) != c1.ids:
        posicion = {i: p for p, i in enumerate(c1.ids)}
        orden = np.array([posicion[i] for i in ds.ids])
        x, y = x[orden], y[orden]

    atributos = list(atributos) if atributos else _atributos_comunes(c1, c2, ds)
    columnas = _bins_por_atributo(ds, atributos, bins_per_attr)
    k = max(c1.k, c2.k)
    d1, d2 = _densidades(x, k, columnas), _densidades(y, k, columnas)

    cruce = _mejor_correspondencia(d1 @ d2.T)
    propia = max(int((d1 * d1).sum()), int((d2 * d2).sum()))
    valor = cruce / propia
    logger.debug(f"ADCO: cruce {cruce}, autosimilitud {propia} -> {valor:.6f}")
    return valor


def comparar(c1: Clustering, c2: Clustering, ds: Dataset, bins_per_attr: int = ADCO_BINS) -> dict[str, float]:
    """Fila de comparación (rand, jaccard, adco) usada por la CLI y el pipeline."""
    return {
        "rand": rand_index(c1, c2),
        "jaccard": jaccard_index(c1, c2),
        "adco": adco(c1, c2, ds, bins_per_attr),
    }
