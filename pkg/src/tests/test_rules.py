# -*- coding: utf-8 -*-
"""
Tests del clasificador por reglas de asociación: minado por niveles contra
un enumerador exhaustivo, orden de disparo y persistencia.
"""

import json
from dataclasses import replace
from fractions import Fraction
from itertools import combinations, product

import numpy as np
import pytest

from src.logic.rules_engine import (
    Condicion,
    Rule,
    RuleSet,
    mine_rules,
    predict_rules,
    reglas_a_csv,
    reglas_desde_csv,
    ruleset_a_json,
    ruleset_desde_dict,
    verificar_reglas,
)
from src.tests.conftest import dataset_categorico
from src.utils.exceptions import ModeloError


def _enumerar_reglas(filas: list[dict], objetivo: str, min_sup: float, min_conf: float, max_largo: int) -> set:
    """Oráculo: todas las combinaciones (un valor por atributo) contadas fila por fila."""
    N = len(filas)
    atributos = [a for a in filas[0] if a != objetivo]
    clases = sorted({f[objetivo] for f in filas})
    esperadas = set()
    for largo in range(1, max_largo + 1):
        for subconjunto in combinations(atributos, largo):
            dominios = [sorted({f[a] for f in filas}) for a in subconjunto]
            for valores in product(*dominios):
                cumplen = [f for f in filas if all(f[a] == v for a, v in zip(subconjunto, valores))]
                if not cumplen:
                    continue
                for clase in clases:
                    n_regla = sum(1 for f in cumplen if f[objetivo] == clase)
                    if (
                        n_regla > 0
                        and Fraction(n_regla, N) >= Fraction(min_sup)
                        and Fraction(n_regla, len(cumplen)) >= Fraction(min_conf)
                    ):
                        lhs = " & ".join(f"{a}={v}" for a, v in sorted(zip(subconjunto, valores)))
                        esperadas.add((lhs, clase, n_regla / N, n_regla / len(cumplen)))
    return esperadas


def _como_conjunto(rs: RuleSet) -> set:
    return {(r.texto_lhs, r.rhs[1], r.support, r.confidence) for r in rs}


# --- mine_rules ---

def test_regla_arte_grafica():
    ds = dataset_categorico([
        {"diploma": "Art", "field": "Graphic"},
        {"diploma": "Art", "field": "Graphic"},
        {"diploma": "Math-Physics", "field": "Software"},
        {"diploma": "Human Sciences", "field": "IT"},
    ])
    rs = mine_rules(ds, "field", min_support=0.5, min_confidence=0.5, max_lhs_len=2)

    assert len(rs) == 1
    regla = rs.reglas[0]
    assert regla.texto_lhs == "diploma=Art"
    assert regla.texto_rhs == "field=Graphic"
    assert (regla.support, regla.confidence) == (0.5, 1.0)
    assert (regla.n_lhs, regla.n_regla, regla.n_total) == (2, 2, 4)


def test_umbrales_cero_enumeran_todos_los_pares():
    filas = [
        {"a": "x", "b": "p", "t": "1"},
        {"a": "y", "b": "p", "t": "2"},
        {"a": "x", "b": "q", "t": "2"},
    ]
    rs = mine_rules(dataset_categorico(filas), "t", 0.0, 0.0, 1)
    assert _como_conjunto(rs) == _enumerar_reglas(filas, "t", 0.0, 0.0, 1)
    assert len(rs) == 6


def test_oraculo_exhaustivo_en_datasets_pequenos():
    rng = np.random.default_rng(2008)
    umbrales = (0.0, 0.1, 0.25, 1 / 3, 0.5)
    for _ in range(60):
        n_filas = int(rng.integers(1, 13))
        n_atributos = int(rng.integers(1, 4))
        filas = [
            {
                **{f"x{j}": str(rng.integers(0, 3)) for j in range(n_atributos)},
                "t": str(rng.integers(0, 2)),
            }
            for _ in range(n_filas)
        ]
        min_sup, min_conf = float(rng.choice(umbrales)), float(rng.choice(umbrales))
        max_largo = int(rng.integers(1, 4))

        rs = mine_rules(dataset_categorico(filas), "t", min_sup, min_conf, max_largo)
        assert _como_conjunto(rs) == _enumerar_reglas(filas, "t", min_sup, min_conf, max_largo)
        assert len(_como_conjunto(rs)) == len(rs), "No puede haber reglas duplicadas"


def test_objetivo_constante_confianza_uno():
    filas = [{"a": str(i % 2), "b": str(i % 3), "t": "IT"} for i in range(6)]
    rs = mine_rules(dataset_categorico(filas), "t", 0.0, 0.0, 2)
    assert len(rs) > 0
    assert all(r.confidence == 1.0 for r in rs)
    assert (rs.clase_defecto, rs.prior_defecto) == ("IT", 1.0)


def test_sin_reglas_no_es_error():
    filas = [{"a": str(i), "t": str(i % 2)} for i in range(4)]
    rs = mine_rules(dataset_categorico(filas), "t", 0.5, 0.9, 2)
    assert len(rs) == 0


def test_dataset_vacio_es_error():
    ds = dataset_categorico([{"a": "1", "t": "x"}])
    with pytest.raises(ModeloError):
        mine_rules(ds.con_filas(ds.filas.iloc[:0]), "t")


@pytest.mark.parametrize("parametros", [{"min_support": 1.5}, {"min_confidence": -0.1}, {"max_lhs_len": 0}])
def test_parametros_invalidos(parametros):
    with pytest.raises(ModeloError):
        mine_rules(dataset_categorico([{"a": "1", "t": "x"}]), "t", **parametros)


def test_recuento_reproduce_soporte_y_confianza(cohorte_sintetica):
    from src.datos.esquema import BinningSpec
    from src.datos.ingest_service import discretize

    ds, _ = cohorte_sintetica
    vista = discretize(ds, BinningSpec.por_defecto(ds))
    rs = mine_rules(vista, "field", 0.02, 0.3, 3, atributos=["gender", "grade", "age", "diploma", "job_relevancy"])
    assert len(rs) > 0
    verificar_reglas(rs, vista)
    for r in rs:
        assert r.confidence * r.n_lhs == pytest.approx(r.support * r.n_total)

    alterada = replace(rs.reglas[0], support=rs.reglas[0].support / 2)
    with pytest.raises(ModeloError):
        verificar_reglas(replace(rs, reglas=(alterada,)), vista)


# --- Rule ---

def test_regla_rechaza_objetivo_en_lhs():
    with pytest.raises(ModeloError):
        Rule((Condicion.igual("field", "IT"),), ("field", "IT"), 0.1, 0.5)


def test_regla_rechaza_atributo_repetido():
    with pytest.raises(ModeloError):
        Rule((Condicion.igual("a", "1"), Condicion.igual("a", "2")), ("t", "x"), 0.1, 0.5)


def test_registro_sin_atributo_es_error():
    regla = Rule((Condicion.igual("a", "1"),), ("t", "x"), 0.1, 0.5)
    with pytest.raises(ModeloError):
        regla.cumple({"b": "1"})


# --- predict_rules con las reglas publicadas ---

def test_regla_uno_predice_software(reglas_publicadas):
    registro = {"gender": "Female", "grade": "14.8-16.3", "diploma": "Math-Physics", "job_relevancy": "0"}
    assert predict_rules(reglas_publicadas, registro) == ("Software", 0.8)


def test_guion_es_atributo_sin_restriccion(reglas_publicadas):
    for banda in ("0-12.7", "16.3-20"):
        registro = {"gender": "Male", "grade": banda, "diploma": "Job and Knowledge", "job_relevancy": "2"}
        assert predict_rules(reglas_publicadas, registro)[0] == "Software"


def test_sin_regla_aplicable_usa_clase_defecto(reglas_publicadas):
    registro = {"gender": "Female", "grade": "0-12.7", "diploma": "Art", "job_relevancy": "1"}
    assert predict_rules(reglas_publicadas, registro) == ("IT", 0.2)


def test_empates_prefieren_lhs_corto_y_luego_lexico():
    largo = Rule((Condicion.igual("a", "1"), Condicion.igual("b", "1")), ("t", "largo"), 0.2, 0.9)
    corto_b = Rule((Condicion.igual("b", "1"),), ("t", "corto_b"), 0.2, 0.9)
    corto_a = Rule((Condicion.igual("a", "1"),), ("t", "corto_a"), 0.2, 0.9)
    rs = RuleSet.ordenado([largo, corto_b, corto_a], objetivo="t", clase_defecto="z", prior_defecto=0.0)

    assert [r.rhs[1] for r in rs] == ["corto_a", "corto_b", "largo"]
    assert predict_rules(rs, {"a": "1", "b": "1"})[0] == "corto_a"
    assert predict_rules(rs, {"a": "0", "b": "1"})[0] == "corto_b"


def test_mayor_confianza_gana():
    debil = Rule((Condicion.igual("a", "1"),), ("t", "debil"), 0.5, 0.6)
    fuerte = Rule((Condicion.igual("a", "1"), Condicion.igual("b", "1")), ("t", "fuerte"), 0.1, 0.9)
    rs = RuleSet.ordenado([debil, fuerte], objetivo="t", clase_defecto="z", prior_defecto=0.0)
    assert predict_rules(rs, {"a": "1", "b": "1"}) == ("fuerte", 0.9)


# --- Persistencia ---

def test_csv_conserva_predicciones(reglas_publicadas):
    texto = reglas_a_csv(reglas_publicadas)
    assert texto.splitlines()[0] == "lhs,rhs,support,confidence,origin"

    cargado = reglas_desde_csv(texto, clase_defecto="IT", prior_defecto=0.2)
    assert [r.texto_lhs for r in cargado] == [r.texto_lhs for r in reglas_publicadas]
    registro = {"gender": "Male", "grade": "0-12.7", "diploma": "Technical & Professional", "job_relevancy": "1"}
    assert predict_rules(cargado, registro)[0] == "Financial Services in Trade Units"


def test_csv_sin_columnas_es_error():
    with pytest.raises(ModeloError):
        reglas_desde_csv("lhs,rhs\na=1,t=x\n")


def test_json_ida_y_vuelta(reglas_publicadas):
    assert ruleset_desde_dict(json.loads(ruleset_a_json(reglas_publicadas))) == reglas_publicadas


def test_json_invalido_es_error():
    with pytest.raises(ModeloError):
        ruleset_desde_dict({"reglas": []})
