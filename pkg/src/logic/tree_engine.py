# -*- coding: utf-8 -*-
"""
Motor de Árbol de Decisión.

Inducción descendente con divisiones categóricas multivía sobre la vista
discretizada, eligiendo la ganancia de información (entropía en logaritmo
natural). Cada hoja se convierte en una regla con origen "tree".
"""

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import pandas as pd

from config.config import ARBOL_MAX_PROFUNDIDAD, ARBOL_MIN_GANANCIA, ARBOL_MIN_HOJA
from src.datos.esquema import Dataset
from src.logic.rules_engine import Condicion, Rule, RuleSet, clase_mayoritaria
from src.utils.exceptions import ModeloError
from src.utils.logger import configurar_logger

logger = configurar_logger(__name__)


@dataclass
class NodoArbol:
    distribucion: dict[str, int]
    profundidad: int
    atributo: str | None = None
    ganancia: float = 0.0
    hijos: dict[str, "NodoArbol"] = field(default_factory=dict)

    @property
    def es_hoja(self) -> bool:
        return self.atributo is None

    @property
    def n(self) -> int:
        return sum(self.distribucion.values())

    @property
    def mayoritaria(self) -> str:
        maximo = max(self.distribucion.values())
        return min(c for c, v in self.distribucion.items() if v == maximo)

    @property
    def probabilidad(self) -> float:
        return self.distribucion[self.mayoritaria] / self.n

    def hijo_mayor(self) -> "NodoArbol":
        """Hijo con más filas de entrenamiento (empates: el primer valor en orden)."""
        return max(self.hijos.values(), key=lambda h: h.n)


@dataclass
class DecisionTree:
    raiz: NodoArbol
    objetivo: str
    entradas: tuple[str, ...]
    max_depth: int = ARBOL_MAX_PROFUNDIDAD
    min_leaf: int = ARBOL_MIN_HOJA
    min_gain: float = ARBOL_MIN_GANANCIA
    n_total: int = 0
    binning: dict = field(default_factory=dict)

    def hojas(self):
        """Recorre las hojas junto con el camino de condiciones (atributo, valor) hasta ellas."""
        pila = [(self.raiz, ())]
        while pila:
            nodo, camino = pila.pop()
            if nodo.es_hoja:
                yield nodo, camino
                continue
            for valor in sorted(nodo.hijos, reverse=True):
                pila.append((nodo.hijos[valor], camino + ((nodo.atributo, valor),)))


def _entropia(conteos: np.ndarray) -> float:
    total = conteos.sum()
    p = conteos[conteos > 0] / total
    return float(-(p * np.log(p)).sum())


def _distribucion(objetivo: np.ndarray) -> dict[str, int]:
    valores, conteos = np.unique(objetivo, return_counts=True)
    return {str(v): int(c) for v, c in zip(valores, conteos)}


def train_tree(
    ds: Dataset,
    target: str,
    max_depth: int = ARBOL_MAX_PROFUNDIDAD,
    min_leaf: int = ARBOL_MIN_HOJA,
    min_gain: float = ARBOL_MIN_GANANCIA,
    atributos=None,
) -> DecisionTree:
    if ds.n < 1:
        raise ModeloError("El árbol requiere al menos una fila de entrenamiento.")
    if target not in ds.nombres:
        raise ModeloError(f"El objetivo '{target}' no es un atributo del dataset.")
    if max_depth < 0 or min_leaf < 1 or min_gain < 0:
        raise ModeloError("Parámetros del árbol inválidos (max_depth >= 0, min_leaf >= 1, min_gain >= 0).")

    entradas = tuple(a for a in (atributos or ds.nombres) if a != target)
    columnas = {a: ds.filas[a].astype(str).to_numpy() for a in entradas}
    objetivo = ds.filas[target].astype(str).to_numpy()

    def construir(indices: np.ndarray, profundidad: int, usados: frozenset) -> NodoArbol:
        nodo = NodoArbol(_distribucion(objetivo[indices]), profundidad)
        if profundidad >= max_depth or len(indices) < 2 * min_leaf or len(nodo.distribucion) == 1:
            return nodo

        _, conteos_padre = np.unique(objetivo[indices], return_counts=True)
        entropia_padre = _entropia(conteos_padre)
        mejor_ganancia, mejor_atributo = -np.inf, None
        for atributo in entradas:
            if atributo in usados:
                continue
            valores = columnas[atributo][indices]
            niveles, inversa = np.unique(valores, return_inverse=True)
            if len(niveles) < 2:
                continue
            tamanos = np.bincount(inversa)
            if tamanos.min() < min_leaf:
                continue
            condicional = sum(
                (tamanos[v] / len(indices)) * _entropia(np.unique(objetivo[indices][inversa == v], return_counts=True)[1])
                for v in range(len(niveles))
            )
            ganancia = entropia_padre - condicional
            if ganancia > mejor_ganancia + 1e-12:
                mejor_ganancia, mejor_atributo = ganancia, atributo

        if mejor_atributo is None or mejor_ganancia < min_gain or mejor_ganancia <= 1e-12:
            return nodo
        nodo.atributo = mejor_atributo
        nodo.ganancia = float(mejor_ganancia)
        valores = columnas[mejor_atributo][indices]
        for valor in sorted(set(valores)):
            nodo.hijos[valor] = construir(indices[valores == valor], profundidad + 1, usados | {mejor_atributo})
        return nodo

    raiz = construir(np.arange(ds.n), 0, frozenset())
    arbol = DecisionTree(raiz, target, entradas, max_depth, min_leaf, min_gain, ds.n)
    logger.info(f"Árbol para '{target}': {sum(1 for _ in arbol.hojas())} hojas sobre {ds.n} filas.")
    return arbol


def predict_tree(t: DecisionTree, record: Mapping) -> tuple[str, float]:
    """Recorre el árbol hasta una hoja y devuelve (clase mayoritaria, fracción mayoritaria)."""
    nodo = t.raiz
    while not nodo.es_hoja:
        if nodo.atributo not in record:
            raise ModeloError(f"El registro no tiene el atributo de división '{nodo.atributo}'.")
        valor = str(record[nodo.atributo])
        siguiente = nodo.hijos.get(valor)
        if siguiente is None:
            siguiente = nodo.hijo_mayor()
            logger.warning(
                f"Valor no visto '{valor}' en '{nodo.atributo}': se sigue la rama con más filas de entrenamiento."
            )
        nodo = siguiente
    return nodo.mayoritaria, nodo.probabilidad


def extract_tree_rules(t: DecisionTree) -> RuleSet:
    """Una regla por hoja: LHS = condiciones del camino, RHS = clase mayoritaria."""
    reglas = []
    for hoja, camino in t.hojas():
        mayor = hoja.distribucion[hoja.mayoritaria]
        reglas.append(Rule(
            lhs=tuple(Condicion.igual(a, v) for a, v in camino),
            rhs=(t.objetivo, hoja.mayoritaria),
            support=mayor / t.n_total,
            confidence=mayor / hoja.n,
            origin="tree",
            n_lhs=hoja.n,
            n_regla=mayor,
            n_total=t.n_total,
        ))
    return RuleSet.ordenado(
        reglas,
        objetivo=t.objetivo,
        clase_defecto=t.raiz.mayoritaria,
        prior_defecto=t.raiz.probabilidad,
        entradas=t.entradas,
        binning=t.binning,
    )


def precision_entrenamiento(t: DecisionTree, ds: Dataset) -> tuple[float, float]:
    """(exactitud del árbol, exactitud de la clase mayoritaria) sobre ds."""
    registros = ds.filas.astype(str).to_dict("records")
    aciertos = sum(1 for r in registros if predict_tree(t, r)[0] == r[t.objetivo])
    _, base = clase_mayoritaria(ds.filas[t.objetivo])
    return aciertos / len(registros), base


# --- Serialización ---

def texto_arbol(t: DecisionTree) -> str:
    lineas = [f"Árbol para '{t.objetivo}' (N={t.n_total})"]

    def recorrer(nodo: NodoArbol, sangria: str):
        if nodo.es_hoja:
            lineas.append(f"{sangria}-> {nodo.mayoritaria} ({nodo.probabilidad:.3f}, n={nodo.n})")
            return
        for valor, hijo in nodo.hijos.items():
            lineas.append(f"{sangria}{nodo.atributo} = {valor}  [n={hijo.n}]")
            recorrer(hijo, sangria + "    ")

    recorrer(t.raiz, "  ")
    return "\n".join(lineas) + "\n"


def red_dependencias(t: DecisionTree) -> pd.DataFrame:
    """Fuerza de cada atributo de división respecto del objetivo: mayor ganancia y número de nodos."""
    filas: dict[str, dict] = {}
    pila = [t.raiz]
    while pila:
        nodo = pila.pop()
        if nodo.es_hoja:
            continue
        fila = filas.setdefault(nodo.atributo, {"atributo": nodo.atributo, "ganancia_max": 0.0, "nodos": 0})
        fila["ganancia_max"] = max(fila["ganancia_max"], nodo.ganancia)
        fila["nodos"] += 1
        pila.extend(nodo.hijos.values())
    tabla = pd.DataFrame(list(filas.values()), columns=["atributo", "ganancia_max", "nodos"])
    return tabla.sort_values(["ganancia_max", "atributo"], ascending=[False, True]).reset_index(drop=True)


def _nodo_a_dict(nodo: NodoArbol) -> dict:
    return {
        "distribucion": nodo.distribucion,
        "profundidad": nodo.profundidad,
        "atributo": nodo.atributo,
        "ganancia": nodo.ganancia,
        "hijos": {v: _nodo_a_dict(h) for v, h in nodo.hijos.items()},
    }


def _nodo_desde_dict(d: dict) -> NodoArbol:
    return NodoArbol(
        distribucion={k: int(v) for k, v in d["distribucion"].items()},
        profundidad=int(d["profundidad"]),
        atributo=d.get("atributo"),
        ganancia=float(d.get("ganancia", 0.0)),
        hijos={v: _nodo_desde_dict(h) for v, h in d.get("hijos", {}).items()},
    )


def arbol_a_dict(t: DecisionTree) -> dict:
    return {
        "tipo": "arbol",
        "objetivo": t.objetivo,
        "entradas": list(t.entradas),
        "max_depth": t.max_depth,
        "min_leaf": t.min_leaf,
        "min_gain": t.min_gain,
        "n_total": t.n_total,
        "binning": t.binning,
        "raiz": _nodo_a_dict(t.raiz),
    }


def arbol_desde_dict(d: dict) -> DecisionTree:
    try:
        return DecisionTree(
            raiz=_nodo_desde_dict(d["raiz"]),
            objetivo=d["objetivo"],
            entradas=tuple(d["entradas"]),
            max_depth=int(d["max_depth"]),
            min_leaf=int(d["min_leaf"]),
            min_gain=float(d["min_gain"]),
            n_total=int(d["n_total"]),
            binning=d.get("binning", {}),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModeloError(f"Archivo de árbol inválido: {e}") from e


def arbol_a_json(t: DecisionTree) -> str:
    return json.dumps(arbol_a_dict(t), indent=2, ensure_ascii=False, sort_keys=True)
