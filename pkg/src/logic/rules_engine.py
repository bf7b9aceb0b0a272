# -*- coding: utf-8 -*-
"""
Motor de Reglas de Asociación (clasificador por reglas).

Búsqueda por niveles de itemsets frecuentes sobre pares (atributo, valor) de la
vista discretizada, con poda por clausura descendente. Se emiten solo reglas
cuyo consecuente es el atributo objetivo. La predicción dispara la primera
regla que cumple el registro según el orden (confianza desc, soporte desc,
largo de LHS asc, orden léxico).
"""

import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Literal, Mapping

import numpy as np
import pandas as pd

from config.config import MAX_LARGO_LHS, MIN_CONFIANZA, MIN_SOPORTE
from src.datos.esquema import Dataset
from src.utils.exceptions import ModeloError
from src.utils.logger import configurar_logger

logger = configurar_logger(__name__)

Origen = Literal["mined", "tree"]


@dataclass(frozen=True)
class Condicion:
    """Predicado atributo ∈ valores. Un solo valor para reglas minadas; varios para bandas unidas."""

    atributo: str
    valores: frozenset[str]

    @classmethod
    def igual(cls, atributo: str, valor: str) -> "Condicion":
        return cls(atributo, frozenset({str(valor)}))

    def cumple(self, valor) -> bool:
        return str(valor) in self.valores

    def texto(self) -> str:
        return f"{self.atributo}={'|'.join(sorted(self.valores))}"


@dataclass(frozen=True)
class Rule:
    lhs: tuple[Condicion, ...]
    rhs: tuple[str, str]
    support: float
    confidence: float
    origin: Origen = "mined"
    n_lhs: int | None = None
    n_regla: int | None = None
    n_total: int | None = None

    def __post_init__(self):
        atributos = [c.atributo for c in self.lhs]
        if len(set(atributos)) != len(atributos):
            raise ModeloError(f"Atributos repetidos en el LHS: {atributos}")
        if self.rhs[0] in atributos:
            raise ModeloError(f"El objetivo '{self.rhs[0]}' no puede aparecer en el LHS.")
        if not (0.0 <= self.support <= 1.0 and 0.0 <= self.confidence <= 1.0):
            raise ModeloError("Soporte y confianza deben estar en [0, 1].")
        object.__setattr__(self, "lhs", tuple(sorted(self.lhs, key=lambda c: c.atributo)))

    @property
    def texto_lhs(self) -> str:
        return " & ".join(c.texto() for c in self.lhs)

    @property
    def texto_rhs(self) -> str:
        return f"{self.rhs[0]}={self.rhs[1]}"

    def cumple(self, record: Mapping) -> bool:
        for c in self.lhs:
            if c.atributo not in record:
                raise ModeloError(f"El registro no tiene el atributo '{c.atributo}' requerido por la regla.")
            if not c.cumple(record[c.atributo]):
                return False
        return True

    def clave_orden(self) -> tuple:
        return (-self.confidence, -self.support, len(self.lhs), self.texto_lhs, self.rhs[1])

    def a_dict(self) -> dict:
        return {
            "lhs": [{"atributo": c.atributo, "valores": sorted(c.valores)} for c in self.lhs],
            "rhs": list(self.rhs),
            "support": self.support,
            "confidence": self.confidence,
            "origin": self.origin,
            "n_lhs": self.n_lhs,
            "n_regla": self.n_regla,
            "n_total": self.n_total,
        }

    @classmethod
    def desde_dict(cls, d: dict) -> "Rule":
        return cls(
            lhs=tuple(Condicion(c["atributo"], frozenset(c["valores"])) for c in d["lhs"]),
            rhs=(d["rhs"][0], d["rhs"][1]),
            support=float(d["support"]),
            confidence=float(d["confidence"]),
            origin=d.get("origin", "mined"),
            n_lhs=d.get("n_lhs"),
            n_regla=d.get("n_regla"),
            n_total=d.get("n_total"),
        )


@dataclass(frozen=True)
class RuleSet:
    reglas: tuple[Rule, ...]
    objetivo: str
    clase_defecto: str
    prior_defecto: float
    min_support: float = MIN_SOPORTE
    min_confidence: float = MIN_CONFIANZA
    max_lhs_len: int = MAX_LARGO_LHS
    entradas: tuple[str, ...] = ()
    binning: dict = field(default_factory=dict)

    @classmethod
    def ordenado(cls, reglas, **kwargs) -> "RuleSet":
        return cls(tuple(sorted(reglas, key=Rule.clave_orden)), **kwargs)

    def __len__(self) -> int:
        return len(self.reglas)

    def __iter__(self):
        return iter(self.reglas)


def _alcanza(numerador: int, denominador: int, umbral: float) -> bool:
    return Fraction(numerador, denominador) >= Fraction(umbral)


def _validar_parametros(ds: Dataset, target: str, min_support: float, min_confidence: float, max_lhs_len: int):
    if ds.n == 0:
        raise ModeloError("No se pueden minar reglas sobre un dataset vacío.")
    if target not in ds.nombres:
        raise ModeloError(f"El objetivo '{target}' no es un atributo del dataset.")
    if not (0 <= min_support <= 1 and 0 <= min_confidence <= 1):
        raise ModeloError("Los umbrales de soporte y confianza deben estar en [0, 1].")
    if max_lhs_len < 1:
        raise ModeloError("max_lhs_len debe ser >= 1.")


def clase_mayoritaria(valores: pd.Series) -> tuple[str, float]:
    """Clase más frecuente (empates: la léxicamente menor) y su frecuencia relativa."""
    conteo = valores.astype(str).value_counts()
    maximo = int(conteo.max())
    clase = min(v for v, c in conteo.items() if c == maximo)
    return clase, maximo / len(valores)


def mine_rules(
    ds: Dataset,
    target: str,
    min_support: float = MIN_SOPORTE,
    min_confidence: float = MIN_CONFIANZA,
    max_lhs_len: int = MAX_LARGO_LHS,
    atributos=None,
) -> RuleSet:
    """
    Reglas LHS -> target=valor con soporte = n(LHS ∧ RHS)/N y confianza = n(LHS ∧ RHS)/n(LHS).
    Un LHS es frecuente si n(LHS) > 0 y n(LHS)/N >= min_support; tiene a lo sumo un ítem por atributo.
    """
    _validar_parametros(ds, target, min_support, min_confidence, max_lhs_len)
    entradas = [a for a in (atributos or ds.nombres) if a != target]
    N = ds.n

    # Ítems (atributo, valor) con su máscara booleana
    items: list[tuple[str, str]] = []
    mascaras: list[np.ndarray] = []
    for nombre in entradas:
        columna = ds.filas[nombre].astype(str).to_numpy()
        for valor in sorted(set(columna)):
            items.append((nombre, valor))
            mascaras.append(columna == valor)
    objetivo = ds.filas[target].astype(str).to_numpy()
    clases = sorted(set(objetivo))
    mascaras_clase = {c: objetivo == c for c in clases}

    frecuentes: dict[tuple[int, ...], np.ndarray] = {}
    nivel: dict[tuple[int, ...], np.ndarray] = {}
    for i, m in enumerate(mascaras):
        n = int(m.sum())
        if n > 0 and _alcanza(n, N, min_support):
            nivel[(i,)] = m
    reglas: list[Rule] = []

    largo = 1
    while nivel:
        frecuentes.update(nivel)
        for itemset, m in nivel.items():
            n_lhs = int(m.sum())
            lhs = tuple(Condicion.igual(*items[i]) for i in itemset)
            for clase in clases:
                n_regla = int((m & mascaras_clase[clase]).sum())
                if n_regla > 0 and _alcanza(n_regla, N, min_support) and _alcanza(n_regla, n_lhs, min_confidence):
                    reglas.append(Rule(
                        lhs, (target, clase), n_regla / N, n_regla / n_lhs, "mined", n_lhs, n_regla, N,
                    ))
        if largo >= max_lhs_len:
            break
        nivel = _siguiente_nivel(nivel, frecuentes, items, N, min_support)
        largo += 1

    clase_defecto, prior = clase_mayoritaria(ds.filas[target])
    logger.info(
        f"Reglas para '{target}': {len(reglas)} reglas de {len(frecuentes)} LHS frecuentes "
        f"(soporte >= {min_support}, confianza >= {min_confidence}, largo <= {max_lhs_len})."
    )
    return RuleSet.ordenado(
        reglas,
        objetivo=target,
        clase_defecto=clase_defecto,
        prior_defecto=prior,
        min_support=min_support,
        min_confidence=min_confidence,
        max_lhs_len=max_lhs_len,
        entradas=tuple(entradas),
    )


def _siguiente_nivel(nivel, frecuentes, items, N, min_support) -> dict:
    """Une itemsets del nivel con prefijo común, poda por clausura descendente y cuenta."""
    candidatos: dict[tuple[int, ...], np.ndarray] = {}
    por_prefijo: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    for clave in sorted(nivel):
        por_prefijo.setdefault(clave[:-1], []).append(clave)

    for grupo in por_prefijo.values():
        for p, a in enumerate(grupo):
            for b in grupo[p + 1:]:
                if items[a[-1]][0] == items[b[-1]][0]:
                    continue
                nuevo = a + (b[-1],)
                if any(sub not in frecuentes for sub in combinations(nuevo, len(nuevo) - 1)):
                    continue
                m = nivel[a] & nivel[b]
                n = int(m.sum())
                if n == 0 or not _alcanza(n, N, min_support):
                    continue
                # antimonotonía: ningún subconjunto puede ser menos frecuente
                for sub in combinations(nuevo, len(nuevo) - 1):
                    if int(frecuentes[sub].sum()) < n:
                        raise ModeloError(f"Antimonotonía violada en el itemset {nuevo}.")
                candidatos[nuevo] = m
    return candidatos


def predict_rules(rs: RuleSet, record: Mapping) -> tuple[str, float]:
    """Dispara la primera regla que cumple el registro; si ninguna, la clase por defecto y su prior."""
    for regla in rs.reglas:
        if regla.cumple(record):
            return regla.rhs[1], regla.confidence
    return rs.clase_defecto, rs.prior_defecto


def verificar_reglas(rs: RuleSet, ds: Dataset) -> None:
    """Recuenta soporte y confianza de cada regla minada sobre ds; lanza ModeloError si no coinciden."""
    registros = ds.filas.astype(str).to_dict("records")
    N = len(registros)
    for regla in rs.reglas:
        if regla.origin != "mined":
            continue
        n_lhs = sum(1 for r in registros if regla.cumple(r))
        n_regla = sum(1 for r in registros if regla.cumple(r) and r[rs.objetivo] == regla.rhs[1])
        if n_lhs == 0 or n_regla / N != regla.support or n_regla / n_lhs != regla.confidence:
            raise ModeloError(f"Recuento inconsistente para la regla '{regla.texto_lhs} -> {regla.texto_rhs}'.")
        # confianza·n(LHS) = soporte·N = n(LHS ∧ RHS)
        if round(regla.confidence * n_lhs) != n_regla or round(regla.support * N) != n_regla:
            raise ModeloError(f"Conteo entero inconsistente para la regla '{regla.texto_lhs}'.")


# --- Persistencia ---

def reglas_a_csv(rs: RuleSet) -> str:
    filas = [
        {
            "lhs": r.texto_lhs,
            "rhs": r.texto_rhs,
            "support": repr(r.support),
            "confidence": repr(r.confidence),
            "origin": r.origin,
        }
        for r in rs.reglas
    ]
    columnas = ["lhs", "rhs", "support", "confidence", "origin"]
    return pd.DataFrame(filas, columns=columnas).to_csv(index=False, lineterminator="\n")


def _parsear_lhs(texto: str) -> tuple[Condicion, ...]:
    # Un fragmento sin "=" pertenece al valor anterior (p. ej. "Technical & Professional")
    partes: list[str] = []
    for fragmento in str(texto).split(" & "):
        if "=" in fragmento or not partes:
            partes.append(fragmento)
        else:
            partes[-1] += " & " + fragmento
    condiciones = []
    for parte in filter(None, (p.strip() for p in partes)):
        if "=" not in parte:
            raise ModeloError(f"Condición mal formada: '{parte}'")
        atributo, valores = parte.split("=", 1)
        condiciones.append(Condicion(atributo.strip(), frozenset(v.strip() for v in valores.split("|"))))
    return tuple(condiciones)


def reglas_desde_csv(texto: str, clase_defecto: str = "", prior_defecto: float = 0.0) -> RuleSet:
    """Carga un RuleSet desde el CSV (lhs, rhs, support, confidence, origin) y lo reordena."""
    try:
        tabla = pd.read_csv(io.StringIO(texto), dtype=str, keep_default_na=False)
    except pd.errors.ParserError as e:
        raise ModeloError(f"CSV de reglas ilegible: {e}") from e
    faltantes = {"lhs", "rhs", "support", "confidence"} - set(tabla.columns)
    if faltantes:
        raise ModeloError(f"Faltan columnas en el CSV de reglas: {sorted(faltantes)}")
    reglas = []
    objetivo = ""
    for fila in tabla.to_dict("records"):
        objetivo, valor = fila["rhs"].split("=", 1)
        reglas.append(Rule(
            _parsear_lhs(fila["lhs"]),
            (objetivo.strip(), valor.strip()),
            float(fila["support"]),
            float(fila["confidence"]),
            fila.get("origin") or "mined",
        ))
    return RuleSet.ordenado(reglas, objetivo=objetivo, clase_defecto=clase_defecto, prior_defecto=prior_defecto)


def ruleset_a_dict(rs: RuleSet) -> dict:
    return {
        "tipo": "reglas",
        "objetivo": rs.objetivo,
        "clase_defecto": rs.clase_defecto,
        "prior_defecto": rs.prior_defecto,
        "min_support": rs.min_support,
        "min_confidence": rs.min_confidence,
        "max_lhs_len": rs.max_lhs_len,
        "entradas": list(rs.entradas),
        "binning": rs.binning,
        "reglas": [r.a_dict() for r in rs.reglas],
    }


def ruleset_desde_dict(d: dict) -> RuleSet:
    try:
        return RuleSet(
            reglas=tuple(Rule.desde_dict(r) for r in d["reglas"]),
            objetivo=d["objetivo"],
            clase_defecto=d["clase_defecto"],
            prior_defecto=float(d["prior_defecto"]),
            min_support=float(d.get("min_support", MIN_SOPORTE)),
            min_confidence=float(d.get("min_confidence", MIN_CONFIANZA)),
            max_lhs_len=int(d.get("max_lhs_len", MAX_LARGO_LHS)),
            entradas=tuple(d.get("entradas", ())),
            binning=d.get("binning", {}),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModeloError(f"Archivo de reglas inválido: {e}") from e


def ruleset_a_json(rs: RuleSet) -> str:
    return json.dumps(ruleset_a_dict(rs), indent=2, ensure_ascii=False, sort_keys=True)
