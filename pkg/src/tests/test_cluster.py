# -*- coding: utf-8 -*-
"""
Tests del motor de clustering: K-means, distancia de log-verosimilitud,
aglomeración, selección automática de K y TwoStep.
"""

import itertools
import logging
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from src.datos.esquema import BinningSpec
from src.datos.synth_service import MEZCLA_DEFECTO, generate_cohort
from src.logic import cluster_engine
from src.logic.cluster_engine import (
    Clustering,
    EstadisticasCluster,
    agglomerate,
    asignar_por_centros,
    auto_k,
    kmeans,
    kmeans_matriz,
    leer_asignaciones,
    loglik_distance,
    twostep,
)
from src.logic.clustsim import rand_index
from src.logic.profile_service import profile_clusters
from src.tests.conftest import dataset_mixto
from src.utils.exceptions import ClusteringError, VarianzaNulaError

SIN_CATEGORICOS = np.zeros((1, 0))


def _grupos_1d(centros, por_grupo: int, semilla: int = 0, sigma: float = 1.0) -> tuple[list[float], list[int]]:
    rng = np.random.default_rng(semilla)
    valores, verdad = [], []
    for g, c in enumerate(centros):
        valores.extend(rng.normal(c, sigma, por_grupo).tolist())
        verdad.extend([g] * por_grupo)
    return valores, verdad


def _continua(*valores: float) -> EstadisticasCluster:
    return EstadisticasCluster.desde_filas(np.array(valores)[:, None], np.zeros((len(valores), 0)), [])


def _categorica(codigos: list[int], niveles: int) -> EstadisticasCluster:
    return EstadisticasCluster.desde_filas(np.zeros((len(codigos), 0)), np.array(codigos)[:, None], [niveles])


# --- K-means ---

def test_kmeans_objetivo_con_centros_dados():
    r = kmeans_matriz(np.array([0.0, 1.0, 10.0, 11.0]), 2, centros_iniciales=np.array([[0.0], [10.0]]))
    assert r.objetivo == pytest.approx(1.0)
    assert r.etiquetas.tolist() == [0, 0, 1, 1]
    assert sorted(r.centros.ravel().tolist()) == [0.5, 10.5]


def test_kmeans_k_igual_a_n_tiene_objetivo_cero():
    r = kmeans_matriz(np.array([[0.0, 1.0], [3.0, 2.0], [7.0, 5.0]]), 3, seed=1)
    assert r.objetivo == pytest.approx(0.0)
    assert sorted(r.etiquetas.tolist()) == [0, 1, 2]


def test_kmeans_k_mayor_que_n_es_error():
    with pytest.raises(ClusteringError):
        kmeans_matriz(np.array([0.0, 1.0]), 3)


def test_kmeans_coincide_con_busqueda_exhaustiva():
    X = np.array([0.0, 1.0, 2.0, 10.0, 11.0, 12.5])
    optimo = math.inf
    for etiquetas in itertools.product((0, 1), repeat=len(X)):
        etiquetas = np.array(etiquetas)
        if len(set(etiquetas)) < 2:
            continue
        costo = sum(((X[etiquetas == c] - X[etiquetas == c].mean()) ** 2).sum() for c in (0, 1))
        optimo = min(optimo, costo)

    r = kmeans_matriz(X, 2, seed=5, n_reinicios=3)
    assert r.objetivo == pytest.approx(optimo)


def _optimo_exhaustivo(x: np.ndarray, k: int) -> float:
    """Mínimo de la suma de cuadrados intra-cluster sobre todas las particiones en k grupos no vacíos."""
    etiquetas = np.array(list(itertools.product(range(k), repeat=len(x))))
    costo = np.zeros(len(etiquetas))
    completas = np.ones(len(etiquetas), dtype=bool)
    for c in range(k):
        mascara = (etiquetas == c).astype(float)
        conteo = mascara.sum(axis=1)
        completas &= conteo > 0
        suma = mascara @ x
        costo += mascara @ (x ** 2) - np.divide(suma ** 2, conteo, out=np.zeros_like(suma), where=conteo > 0)
    return float(costo[completas].min())


def test_kmeans_contra_optimo_exhaustivo_en_casos_aleatorios():
    rng = np.random.default_rng(31)
    aciertos = 0
    for caso in range(100):
        k = int(rng.integers(1, 4))
        x = rng.uniform(0, 10, int(rng.integers(max(k, 2), 9)))
        optimo = _optimo_exhaustivo(x, k)

        simple = kmeans_matriz(x, k, seed=caso)
        assert simple.objetivo >= optimo - 1e-9
        assert all(b <= a + 1e-9 for a, b in zip(simple.historial, simple.historial[1:]))

        mejor = kmeans_matriz(x, k, seed=caso, n_reinicios=5)
        assert optimo - 1e-9 <= mejor.objetivo <= simple.objetivo
        if mejor.objetivo == pytest.approx(optimo, rel=1e-9, abs=1e-9):
            aciertos += 1
    assert aciertos >= 90


def test_kmeans_objetivo_monotono(cohorte_sintetica):
    ds, _ = cohorte_sintetica
    c = kmeans(ds, 3, seed=11)
    historial = c.historial_objetivo
    assert all(b <= a + 1e-9 for a, b in zip(historial, historial[1:])), "El objetivo no puede aumentar"
    assert c.objetivo == historial[-1]
    c.verificar(ds)


def test_kmeans_determinista(cohorte_sintetica):
    ds, _ = cohorte_sintetica
    a, b = kmeans(ds, 3, seed=4), kmeans(ds, 3, seed=4)
    assert np.array_equal(a.asignacion, b.asignacion)
    assert a.objetivo == b.objetivo


def test_kmeans_invariante_a_escala():
    rng = np.random.default_rng(3)
    nota = rng.uniform(0, 20, 60)
    edad = rng.uniform(17, 60, 60)
    genero = rng.choice(["Female", "Male"], 60).tolist()
    base = dataset_mixto({"grade": nota.tolist(), "age": edad.tolist()}, {"gender": genero})
    escalado = dataset_mixto({"grade": (nota * 4.0).tolist(), "age": edad.tolist()}, {"gender": genero})

    a = kmeans(base, 3, seed=9, atributos=("grade", "age", "gender"))
    b = kmeans(escalado, 3, seed=9, atributos=("grade", "age", "gender"))
    assert np.array_equal(a.asignacion, b.asignacion)


def test_kmeans_reubica_clusters_vacios():
    # Filas duplicadas: con 3 centros sobre 2 valores distintos un cluster queda vacío
    X = np.array([0.0, 0.0, 0.0, 5.0, 5.0, 5.0])
    r = kmeans_matriz(X, 3, centros_iniciales=np.array([[0.0], [5.0], [100.0]]))
    assert r.reubicaciones >= 1
    assert r.objetivo == pytest.approx(0.0)


def test_asignar_por_centros_reproduce_el_ajuste(cohorte_sintetica):
    ds, _ = cohorte_sintetica
    c = kmeans(ds, 3, seed=2)
    assert np.array_equal(asignar_por_centros(c, ds), c.asignacion)


def test_asignar_por_centros_requiere_kmeans():
    c = Clustering.desde_etiquetas(["a", "b"], [0, 1])
    with pytest.raises(ClusteringError):
        asignar_por_centros(c, dataset_mixto({"grade": [1.0, 2.0]}))


# --- Distancia de log-verosimilitud ---

def test_distancia_singletons_continuos():
    d = loglik_distance(_continua(0.0), _continua(2.0), [1.0])
    assert d == pytest.approx(math.log(2))


def test_distancia_sin_perdida_de_informacion():
    a = EstadisticasCluster.desde_filas(np.array([[1.0], [1.0]]), np.array([[0], [1]]), [2])
    b = EstadisticasCluster.desde_filas(np.array([[1.0], [1.0]]), np.array([[1], [0]]), [2])
    assert loglik_distance(a, b, [1.0]) == pytest.approx(0.0, abs=1e-12)


def test_distancia_singletons_categoricos():
    d = loglik_distance(_categorica([0], 2), _categorica([1], 2), np.zeros(0))
    assert d == pytest.approx(2 * math.log(2))


def test_distancia_simetrica_y_no_negativa():
    rng = np.random.default_rng(21)
    for _ in range(50):
        a = EstadisticasCluster.desde_filas(
            rng.normal(size=(rng.integers(1, 6), 2)), np.zeros((1, 0)), []
        )
        b = EstadisticasCluster.desde_filas(
            rng.normal(size=(rng.integers(1, 6), 2)), np.zeros((1, 0)), []
        )
        varianzas = rng.uniform(0.5, 2.0, 2)
        d_ab, d_ba = loglik_distance(a, b, varianzas), loglik_distance(b, a, varianzas)
        assert d_ab >= 0
        assert d_ab == pytest.approx(d_ba)


def test_varianza_global_cero_es_error():
    with pytest.raises(VarianzaNulaError, match="constante"):
        loglik_distance(_continua(1.0), _continua(1.0), [0.0])


def test_estadisticas_fusionadas_son_la_suma():
    filas = np.array([[0.0], [2.0], [5.0]])
    codigos = np.array([[0], [1], [1]])
    juntas = EstadisticasCluster.desde_filas(filas, codigos, [2])
    partes = (
        EstadisticasCluster.desde_filas(filas[:1], codigos[:1], [2])
        + EstadisticasCluster.desde_filas(filas[1:], codigos[1:], [2])
    )
    assert juntas.coincide(partes)
    assert partes.media[0] == pytest.approx(7.0 / 3)


# --- Aglomeración ---

def test_filas_identicas_se_fusionan_primero():
    ds = dataset_mixto({"x": [0.0, 0.0, 5.0, 9.0]})
    trace = agglomerate(ds, 3, atributos=("x",))
    assert trace.pasos[0].par == (0, 1)
    assert trace.pasos[0].distancia == pytest.approx(0.0, abs=1e-12)


def test_traza_completa_y_bic_registrado():
    valores, _ = _grupos_1d((0, 10), 6)
    ds = dataset_mixto({"x": valores})
    trace = agglomerate(ds, 4, atributos=("x",))

    assert [p.k for p in trace.pasos] == list(range(ds.n - 1, 0, -1))
    assert set(range(1, 6)) <= set(trace.bic)
    assert trace.distancia_fusion(2) == trace.pasos[-1].distancia
    for k in (1, 2, 3):
        assert len(np.unique(trace.miembros_en_nivel(k))) == k


def test_bic_de_un_cluster_contra_formula_cerrada():
    # Con un atributo estandarizado: ξ_total = -N·½·ln 2 y m_1 = 2
    valores, _ = _grupos_1d((0, 4, 9), 7, semilla=2)
    ds = dataset_mixto({"x": valores})
    trace = agglomerate(ds, 3, atributos=("x",))
    n = ds.n
    assert trace.bic[1] == pytest.approx(n * math.log(2) + 2 * math.log(n), rel=1e-9)


def test_grupos_separados_dominan_las_ultimas_fusiones():
    valores, _ = _grupos_1d((0, 100, 200), 10, semilla=1)
    trace = agglomerate(dataset_mixto({"x": valores}), 5, atributos=("x",))
    ultimas = min(trace.distancia_fusion(2), trace.distancia_fusion(3))
    assert all(p.distancia < ultimas for p in trace.pasos if p.k >= 3)


def test_aglomerar_requiere_dos_filas():
    with pytest.raises(ClusteringError):
        agglomerate(dataset_mixto({"x": [1.0]}), 3, atributos=("x",))


def test_traza_a_csv():
    trace = agglomerate(dataset_mixto({"x": [0.0, 1.0, 7.0]}), 2, atributos=("x",))
    lineas = trace.a_csv().splitlines()
    assert lineas[0] == "k,merge_distance,BIC"
    assert len(lineas) == 3


def test_micro_clusters_para_datasets_grandes(monkeypatch):
    monkeypatch.setattr(cluster_engine, "UMBRAL_MICRO_CLUSTERS", 50)
    monkeypatch.setattr(cluster_engine, "MAX_MICRO_CLUSTERS", 10)
    valores, _ = _grupos_1d((0, 50), 100, semilla=6)
    trace = agglomerate(dataset_mixto({"x": valores}), 5, atributos=("x",))

    assert 2 <= trace.n_unidades <= 10
    assert len(trace.pasos) == trace.n_unidades - 1
    assert len(trace.unidad_de_fila) == 200


# --- auto_k y TwoStep ---

def test_auto_k_dos_grupos():
    valores, _ = _grupos_1d((0, 100), 50, semilla=3)
    trace = agglomerate(dataset_mixto({"x": valores}), 10, atributos=("x",))
    assert auto_k(trace, 10) == 2


def test_auto_k_tres_grupos():
    valores, _ = _grupos_1d((0, 100, 200), 30, semilla=4)
    trace = agglomerate(dataset_mixto({"x": valores}), 10, atributos=("x",))
    assert auto_k(trace, 10) == 3


def test_auto_k_mancha_unica():
    valores, _ = _grupos_1d((0,), 200, semilla=5)
    trace = agglomerate(dataset_mixto({"x": valores}), 10, atributos=("x",))
    assert auto_k(trace, 10) == 1


def test_auto_k_sin_umbral_de_ganancia_nula_divide_la_mancha(monkeypatch):
    valores, _ = _grupos_1d((0,), 200, semilla=5)
    trace = agglomerate(dataset_mixto({"x": valores}), 10, atributos=("x",))
    assert trace.distancia_fusion(2) / trace.n_filas <= cluster_engine.FACTOR_GANANCIA_NULA * trace.ganancia_nula

    monkeypatch.setattr(cluster_engine, "FACTOR_GANANCIA_NULA", 0.0)
    assert auto_k(trace, 10) >= 2


def test_auto_k_umbral_de_ganancia_nula_no_afecta_grupos_reales():
    valores, _ = _grupos_1d((0, 100), 50, semilla=3)
    trace = agglomerate(dataset_mixto({"x": valores}), 10, atributos=("x",))
    assert trace.distancia_fusion(2) / trace.n_filas > cluster_engine.FACTOR_GANANCIA_NULA * trace.ganancia_nula


def test_twostep_recupera_grupos():
    valores, verdad = _grupos_1d((0, 100), 40, semilla=8)
    ds = dataset_mixto({"x": valores})
    c = twostep(ds, 10, atributos=("x",))

    assert c.k == 2
    assert rand_index(c, Clustering.desde_etiquetas(ds.ids, verdad)) == 1.0
    c.verificar(ds)


def test_twostep_filas_identicas():
    ds = dataset_mixto({"x": [3.0] * 8}, {"gender": ["Male"] * 8})
    c = twostep(ds, 5, atributos=("x", "gender"))
    assert c.k == 1
    assert c.asignacion.tolist() == [0] * 8


def test_asignacion_final_contra_estadisticas_fijas_del_nivel_k():
    rng = np.random.default_rng(12)
    valores, _ = _grupos_1d((0, 8, 30), 15, semilla=12, sigma=2.0)
    generos = rng.choice(["Female", "Male"], len(valores)).tolist()
    ds = dataset_mixto({"x": valores}, {"gender": generos})

    trace = agglomerate(ds, 10, atributos=("x", "gender"))
    k = auto_k(trace, 10)
    previa = trace.miembros_en_nivel(k)
    X, codigos, niveles = trace.estandarizados, trace.codigos, list(trace.niveles)
    varianzas = X.var(axis=0)
    clusters = [EstadisticasCluster.desde_filas(X[previa == c], codigos[previa == c], niveles) for c in range(k)]
    esperado = [
        int(np.argmin([
            loglik_distance(EstadisticasCluster.desde_filas(X[i:i + 1], codigos[i:i + 1], niveles), s, varianzas)
            for s in clusters
        ]))
        for i in range(ds.n)
    ]

    c = twostep(ds, 10, atributos=("x", "gender"))
    assert rand_index(c, Clustering.desde_etiquetas(ds.ids, esperado)) == 1.0


def test_twostep_descarta_clusters_vaciados_por_la_reasignacion(monkeypatch, caplog):
    valores, _ = _grupos_1d((0, 100, 200), 30, semilla=4)
    ds = dataset_mixto({"x": valores})
    monkeypatch.setattr(cluster_engine, "_reasignar", lambda trace, previa, k: np.where(previa == 1, 0, previa))

    with caplog.at_level(logging.WARNING, logger=cluster_engine.__name__):
        c = twostep(ds, 10, atributos=("x",))

    assert c.k == 2
    assert np.unique(c.asignacion).tolist() == [0, 1]
    assert "K pasa de 3 a 2" in caplog.text
    c.verificar(ds)


def test_twostep_determinista(cohorte_sintetica):
    ds, _ = cohorte_sintetica
    a, b = twostep(ds, 8), twostep(ds, 8)
    assert a.k == b.k
    assert np.array_equal(a.asignacion, b.asignacion)


# --- Persistencia ---

def test_asignaciones_ida_y_vuelta(cohorte_sintetica):
    ds, _ = cohorte_sintetica
    c = kmeans(ds, 3, seed=1)
    leido = leer_asignaciones(c.a_csv(), ds)
    assert np.array_equal(leido.asignacion, c.asignacion)
    leido.verificar(ds)


def test_asignaciones_incompletas(cohorte_sintetica):
    ds, _ = cohorte_sintetica
    with pytest.raises(ClusteringError):
        leer_asignaciones("id,cluster\nnadie,0\n", ds)


def test_verificar_detecta_estadisticas_alteradas(cohorte_sintetica):
    ds, _ = cohorte_sintetica
    c = kmeans(ds, 3, seed=1)
    alterado = replace(c, estadisticas=tuple(reversed(c.estadisticas)))
    with pytest.raises(ClusteringError):
        alterado.verificar(ds)


# --- Mezcla por defecto ---

def _verdad(ds, verdad) -> Clustering:
    return Clustering.desde_etiquetas(ds.ids, verdad["component"], k=len(MEZCLA_DEFECTO))


@pytest.mark.parametrize("seed", [2008, 11, 23])
def test_twostep_recupera_la_mezcla_por_defecto(seed):
    ds, verdad = generate_cohort(MEZCLA_DEFECTO, 600, seed, 2008)
    c = twostep(ds, 15)
    assert c.k == 3
    assert rand_index(c, _verdad(ds, verdad)) >= 0.85


@pytest.mark.parametrize("seed", [2008, 5])
def test_kmeans_recupera_la_mezcla_por_defecto(seed):
    ds, verdad = generate_cohort(MEZCLA_DEFECTO, 3000, seed, 2008)
    km = kmeans(ds, 3, seed=seed, n_reinicios=5)
    assert rand_index(km, _verdad(ds, verdad)) >= 0.85


def test_perfil_del_cluster_de_25_a_31_anios():
    ds, _ = generate_cohort(MEZCLA_DEFECTO, 3000, 2008, 2008)
    km = kmeans(ds, 3, seed=2008, n_reinicios=5)
    perfiles = profile_clusters(ds, km, BinningSpec.por_defecto(ds))

    medio = max(perfiles, key=lambda p: p.bandas["age"]["25-31"])
    assert medio.bandas["age"]["25-31"] == pytest.approx(0.72, abs=0.05)
    assert medio.proporciones["gender"]["Male"] > 0.90


@pytest.mark.lento
def test_mezcla_por_defecto_en_veinte_semillas():
    aciertos_k = 0
    for seed in range(20):
        ds, verdad = generate_cohort(MEZCLA_DEFECTO, 3000, seed, 2008)
        inicio = time.perf_counter()
        c = twostep(ds, 15)
        assert time.perf_counter() - inicio < 60
        if c.k == 3:
            aciertos_k += 1
            assert rand_index(c, _verdad(ds, verdad)) >= 0.85
        km = kmeans(ds, 3, seed=seed, n_reinicios=5)
        assert rand_index(km, _verdad(ds, verdad)) >= 0.85
    assert aciertos_k >= 18
