# -*- coding: utf-8 -*-
"""
Tests de similitud entre clusterings (Rand, Jaccard, ADCO) contra oráculos
de enumeración de pares y de permutaciones por fuerza bruta.
"""

from dataclasses import replace
from itertools import combinations, permutations

import numpy as np
import pytest

from src.logic.cluster_engine import Clustering
from src.logic.clustsim import PairCounts, adco, comparar, jaccard_index, pair_counts, rand_index
from src.tests.conftest import dataset_mixto
from src.utils.exceptions import ComparacionError


def _c(etiquetas, ids=None) -> Clustering:
    ids = ids or [f"r{i}" for i in range(len(etiquetas))]
    return Clustering.desde_etiquetas(ids, etiquetas)


def _oraculo_pares(x, y) -> tuple[int, int, int, int]:
    a = b = c = d = 0
    for i, j in combinations(range(len(x)), 2):
        mismo_1, mismo_2 = x[i] == x[j], y[i] == y[j]
        if mismo_1 and mismo_2:
            a += 1
        elif mismo_1:
            b += 1
        elif mismo_2:
            c += 1
        else:
            d += 1
    return a, b, c, d


def _oraculo_adco(x, y, columnas_bins, k) -> float:
    """Densidades por conteo directo y máximo sobre todas las permutaciones."""

    def densidad(asig, cluster):
        return [
            sum(1 for fila, v in enumerate(asig) if v == cluster and bins[fila] == b)
            for bins, n_bins in columnas_bins
            for b in range(n_bins)
        ]

    d1 = [densidad(x, i) for i in range(k)]
    d2 = [densidad(y, i) for i in range(k)]
    punto = lambda u, v: sum(p * q for p, q in zip(u, v))  # noqa: E731
    cruce = max(sum(punto(d1[i], d2[p[i]]) for i in range(k)) for p in permutations(range(k)))
    propia = max(sum(punto(v, v) for v in d1), sum(punto(v, v) for v in d2))
    return cruce / propia


# --- Rand y Jaccard ---

def test_ejemplo_de_tres_filas():
    c1, c2 = _c([0, 0, 1]), _c([0, 1, 1])
    assert pair_counts(c1, c2) == PairCounts(0, 1, 1, 1)
    assert rand_index(c1, c2) == pytest.approx(1 / 3)
    assert jaccard_index(c1, c2) == 0.0


def test_identidad():
    c = _c([0, 0, 1, 2, 2])
    assert rand_index(c, c) == 1.0
    assert jaccard_index(c, c) == 1.0


def test_todos_singletons_jaccard_convencion():
    c = _c([0, 1, 2, 3])
    assert jaccard_index(c, c) == 1.0


def test_invariante_a_reetiquetado():
    c1, c2 = _c([0, 0, 1, 1, 2, 2]), _c([0, 1, 1, 2, 2, 2])
    reetiquetado = _c([2, 0, 0, 1, 1, 1])
    assert rand_index(c1, c2) == rand_index(c1, reetiquetado)
    assert jaccard_index(c1, c2) == jaccard_index(c1, reetiquetado)


def test_filas_en_otro_orden():
    c1 = _c([0, 0, 1], ids=["a", "b", "c"])
    c2 = _c([1, 0, 0], ids=["c", "b", "a"])
    assert rand_index(c1, c2) == 1.0


def test_oraculo_de_pares_en_datasets_aleatorios():
    rng = np.random.default_rng(12)
    for _ in range(60):
        n = int(rng.integers(2, 201))
        x = rng.integers(0, int(rng.integers(1, 8)), n)
        y = rng.integers(0, int(rng.integers(1, 8)), n)
        c1, c2 = _c(x.tolist()), _c(y.tolist())
        a, b, c, d = _oraculo_pares(x.tolist(), y.tolist())

        conteos = pair_counts(c1, c2)
        assert (conteos.a, conteos.b, conteos.c, conteos.d) == (a, b, c, d)
        assert abs(rand_index(c1, c2) - (a + d) / (a + b + c + d)) <= 1e-12
        jaccard = a / (a + b + c) if a + b + c else 1.0
        assert abs(jaccard_index(c1, c2) - jaccard) <= 1e-12
        assert rand_index(c1, c2) == rand_index(c2, c1)
        assert jaccard_index(c1, c2) == jaccard_index(c2, c1)


def test_filas_distintas_es_error():
    with pytest.raises(ComparacionError):
        rand_index(_c([0, 1], ids=["a", "b"]), _c([0, 1], ids=["a", "z"]))


def test_una_fila_no_tiene_pares():
    with pytest.raises(ComparacionError):
        rand_index(_c([0]), _c([0]))


# --- ADCO ---

@pytest.fixture
def cuatro_filas():
    return dataset_mixto({"x": [0.0, 1.0, 2.0, 3.0]}, {"g": ["a", "a", "b", "b"]})


def test_adco_ejemplo_a_mano(cuatro_filas):
    # x con 2 bins de ancho 1.5 -> (0, 0, 1, 1); g -> (a, a, b, b)
    c1, c2 = _c([0, 0, 1, 1]), _c([0, 1, 1, 1])
    valor = adco(c1, c2, cuatro_filas, bins_per_attr=2)
    assert valor == pytest.approx(12 / 16)
    oraculo = _oraculo_adco([0, 0, 1, 1], [0, 1, 1, 1], [([0, 0, 1, 1], 2), ([0, 0, 1, 1], 2)], 2)
    assert valor == pytest.approx(oraculo)


def test_adco_identidad_y_un_cluster(cuatro_filas):
    c = _c([0, 1, 1, 0])
    assert adco(c, c, cuatro_filas) == pytest.approx(1.0)
    todo = _c([0, 0, 0, 0])
    assert adco(todo, todo, cuatro_filas) == pytest.approx(1.0)


def test_adco_simetrico_e_invariante(cuatro_filas):
    c1, c2 = _c([0, 0, 1, 1]), _c([0, 1, 1, 1])
    invertido = _c([1, 0, 0, 0])
    valor = adco(c1, c2, cuatro_filas, bins_per_attr=2)
    assert adco(c2, c1, cuatro_filas, bins_per_attr=2) == pytest.approx(valor)
    assert adco(c1, invertido, cuatro_filas, bins_per_attr=2) == pytest.approx(valor)
    assert 0.0 < valor <= 1.0


def test_adco_contra_fuerza_bruta_aleatorio():
    rng = np.random.default_rng(5)
    for _ in range(60):
        n = int(rng.integers(4, 25))
        g = rng.choice(["a", "b", "c"], n).tolist()
        ds = dataset_mixto({"x": rng.uniform(0, 10, n).tolist()}, {"g": g})
        k = int(rng.integers(1, 5))
        x, y = rng.integers(0, k, n), rng.integers(0, k, n)
        x[0], y[0] = k - 1, k - 1
        c1, c2 = _c(x.tolist()), _c(y.tolist())
        reetiquetado = Clustering.desde_etiquetas(c2.ids, rng.permutation(k)[y], k=k)

        valores = ds.filas["x"].to_numpy()
        ancho = (valores.max() - valores.min()) / 3
        bins_x = [min(int((v - valores.min()) // ancho), 2) for v in valores]
        niveles = sorted(set(g))
        bins_g = [niveles.index(v) for v in g]
        oraculo = _oraculo_adco(x.tolist(), y.tolist(), [(bins_x, 3), (bins_g, len(niveles))], k)

        valor = adco(c1, c2, ds, bins_per_attr=3)
        assert valor == pytest.approx(oraculo)
        assert adco(c2, c1, ds, bins_per_attr=3) == pytest.approx(valor)
        assert adco(c1, reetiquetado, ds, bins_per_attr=3) == pytest.approx(valor)
        assert adco(c1, c1, ds, bins_per_attr=3) == pytest.approx(1.0)
        assert 0.0 < valor <= 1.0 + 1e-12


def test_adco_usa_los_atributos_comunes(cuatro_filas):
    c1 = replace(_c([0, 0, 1, 1]), atributos=("x",))
    c2 = replace(_c([0, 1, 1, 1]), atributos=("x", "g"))
    valor = adco(c1, c2, cuatro_filas, bins_per_attr=2)

    assert adco(c2, c1, cuatro_filas, bins_per_attr=2) == pytest.approx(valor)
    assert valor == pytest.approx(adco(_c([0, 0, 1, 1]), _c([0, 1, 1, 1]), cuatro_filas, 2, atributos=["x"]))


def test_adco_sin_atributos_comunes_es_error(cuatro_filas):
    c1 = replace(_c([0, 0, 1, 1]), atributos=("x",))
    c2 = replace(_c([0, 1, 1, 1]), atributos=("g",))
    with pytest.raises(ComparacionError):
        adco(c1, c2, cuatro_filas)


def test_adco_asignacion_optima_para_k_grande():
    rng = np.random.default_rng(8)
    n = 120
    ds = dataset_mixto({"x": rng.uniform(0, 1, n).tolist(), "y": rng.uniform(0, 1, n).tolist()})
    etiquetas = np.arange(n) % 10
    permutacion = rng.permutation(10)
    c1, c2 = _c(etiquetas.tolist()), _c(permutacion[etiquetas].tolist())
    assert adco(c1, c2, ds) == pytest.approx(1.0)


def test_adco_dataset_vacio_es_error():
    ds = dataset_mixto({"x": [1.0, 2.0]})
    vacio = ds.con_filas(ds.filas.iloc[:0])
    with pytest.raises(ComparacionError):
        adco(_c([]), _c([]), vacio)


def test_comparar_devuelve_los_tres_indices(cuatro_filas):
    c1, c2 = _c([0, 0, 1, 1]), _c([0, 1, 1, 1])
    fila = comparar(c1, c2, cuatro_filas, bins_per_attr=2)
    assert set(fila) == {"rand", "jaccard", "adco"}
    assert fila["rand"] == pytest.approx(0.5)
