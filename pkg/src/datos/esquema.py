# -*- coding: utf-8 -*-
"""
Tipos del dominio: registros de candidatos, datasets y especificaciones de binning.

Las columnas del CSV siguen la tabla de atributos de los candidatos admitidos
(ID, género, nota, edad, tipo de diploma, empleo, relación del empleo,
grupo de carrera y carrera) más el año de cohorte.
"""

from dataclasses import dataclass, field, replace
from typing import Iterator, Literal

import numpy as np
import pandas as pd

from config.config import (
    CORTES_EDAD,
    CUANTILES_NOTA,
    RANGO_EDAD_BINNING,
    RANGO_NOTA,
)
from src.utils.exceptions import DiscretizacionError

TipoAtributo = Literal["continuo", "categorico"]

VALOR_DESCONOCIDO = "unknown"

EMPLEOS = ("Unemployed", "Employed")
RELEVANCIAS = ("0", "1", "2")  # 0 = desempleado, 1 = empleo relacionado, 2 = no relacionado
DIPLOMAS = (
    "Math-Physics",
    "Job and Knowledge",
    "Technical & Professional",
    "Art",
    "Human Sciences",
)

# Catálogo de carreras por grupo (la universidad admite en 4 grupos)
CATALOGO_CARRERAS: dict[str, str] = {
    "Software": "Industry",
    "IT": "Industry",
    "Car Quality Control & Machine Tools": "Industry",
    "Accounting- Industrial": "Management and Social Services",
    "Financial Services in Trade Units": "Management and Social Services",
    "Graphic": "Culture and Art",
    "Agronomy": "Agricultural",
}
GRUPOS_CARRERA = (
    "Industry",
    "Management and Social Services",
    "Culture and Art",
    "Agricultural",
)

COLUMNA_ID = "id"
COLUMNA_COHORTE = "cohort_year"
COLUMNA_CLASE = "class"


@dataclass(frozen=True)
class Atributo:
    nombre: str
    tipo: TipoAtributo


ESQUEMA_BASE: tuple[Atributo, ...] = (
    Atributo("gender", "categorico"),
    Atributo("grade", "continuo"),
    Atributo("age", "continuo"),
    Atributo("diploma", "categorico"),
    Atributo("employment", "categorico"),
    Atributo("job_relevancy", "categorico"),
    Atributo("field_group", "categorico"),
    Atributo("field", "categorico"),
)


@dataclass(frozen=True)
class CandidateRecord:
    """Una fila validada de candidato admitido."""

    id: str
    gender: str
    grade: float
    age: int
    diploma: str
    employment: str
    job_relevancy: int
    field_group: str
    field: str
    cohort_year: int


@dataclass(frozen=True)
class Rechazo:
    linea: int
    id: str
    motivo: str


@dataclass(frozen=True)
class Procedencia:
    fuente: str
    log: tuple[str, ...] = ()
    rechazos: tuple[Rechazo, ...] = ()

    def con_nota(self, *notas: str) -> "Procedencia":
        return replace(self, log=self.log + tuple(notas))


@dataclass(frozen=True)
class Dataset:
    """
    Conjunto de filas con su esquema y procedencia.

    'filas' siempre contiene las columnas id, los atributos del esquema
    (en orden) y cohort_year. Las operaciones nunca modifican 'filas' en
    el lugar: devuelven un Dataset nuevo.
    """

    esquema: tuple[Atributo, ...]
    filas: pd.DataFrame
    procedencia: Procedencia = field(default_factory=lambda: Procedencia("memoria"))

    @property
    def n(self) -> int:
        return len(self.filas)

    @property
    def nombres(self) -> list[str]:
        return [a.nombre for a in self.esquema]

    @property
    def continuos(self) -> list[str]:
        return [a.nombre for a in self.esquema if a.tipo == "continuo"]

    @property
    def categoricos(self) -> list[str]:
        return [a.nombre for a in self.esquema if a.tipo == "categorico"]

    @property
    def ids(self) -> list[str]:
        return self.filas[COLUMNA_ID].astype(str).tolist()

    def tipo_de(self, nombre: str) -> TipoAtributo:
        for a in self.esquema:
            if a.nombre == nombre:
                return a.tipo
        raise KeyError(nombre)

    def columnas(self) -> list[str]:
        return [COLUMNA_ID, *self.nombres, COLUMNA_COHORTE]

    def con_filas(self, filas: pd.DataFrame, *notas: str) -> "Dataset":
        return Dataset(
            self.esquema,
            filas.reset_index(drop=True),
            self.procedencia.con_nota(*notas),
        )

    def con_atributo(self, nombre: str, tipo: TipoAtributo, valores, *notas: str) -> "Dataset":
        """Agrega (o reemplaza) un atributo, p. ej. la columna 'class'."""
        filas = self.filas.copy()
        filas[nombre] = list(valores)
        esquema = tuple(a for a in self.esquema if a.nombre != nombre) + (Atributo(nombre, tipo),)
        orden = [COLUMNA_ID, *[a.nombre for a in esquema], COLUMNA_COHORTE]
        return Dataset(esquema, filas[orden], self.procedencia.con_nota(*notas))

    def filtrar_cohorte(self, anio: int) -> "Dataset":
        mascara = self.filas[COLUMNA_COHORTE] == anio
        return self.con_filas(self.filas[mascara], f"cohorte {anio}: {int(mascara.sum())} filas")

    def registros(self) -> Iterator[CandidateRecord]:
        """Itera las filas como CandidateRecord (requiere un dataset sin faltantes)."""
        for fila in self.filas.itertuples(index=False):
            d = fila._asdict()
            yield CandidateRecord(
                id=str(d[COLUMNA_ID]),
                gender=d["gender"],
                grade=float(d["grade"]),
                age=int(d["age"]),
                diploma=d["diploma"],
                employment=d["employment"],
                job_relevancy=int(d["job_relevancy"]),
                field_group=d["field_group"],
                field=d["field"],
                cohort_year=int(d[COLUMNA_COHORTE]),
            )


def _formatear_corte(valor: float) -> str:
    return f"{valor:g}"


@dataclass(frozen=True)
class EspecIntervalos:
    """
    Intervalos de un atributo continuo: [min, c1), [c1, c2), ..., [ck, max].
    Cerrados a la izquierda y abiertos a la derecha salvo el último, que es cerrado.
    """

    cortes: tuple[float, ...]
    minimo: float
    maximo: float
    etiquetas: tuple[str, ...] = ()

    def __post_init__(self):
        bordes = (self.minimo, *self.cortes, self.maximo)
        if any(b >= a for a, b in zip(bordes[1:], bordes[:-1])):
            raise DiscretizacionError(f"Los cortes deben ser estrictamente crecientes dentro del rango: {bordes}")
        if not self.etiquetas:
            etiquetas = tuple(
                f"{_formatear_corte(a)}-{_formatear_corte(b)}" for a, b in zip(bordes[:-1], bordes[1:])
            )
            object.__setattr__(self, "etiquetas", etiquetas)
        if len(self.etiquetas) != len(self.cortes) + 1:
            raise DiscretizacionError("Se requiere una etiqueta por intervalo.")

    def indice(self, valor: float) -> int | None:
        if not (self.minimo <= valor <= self.maximo):
            return None
        return int(np.searchsorted(np.asarray(self.cortes, dtype=float), valor, side="right"))

    def etiqueta(self, valor: float) -> str | None:
        i = self.indice(valor)
        return None if i is None else self.etiquetas[i]

    def a_dict(self) -> dict:
        return {
            "cortes": list(self.cortes),
            "minimo": self.minimo,
            "maximo": self.maximo,
            "etiquetas": list(self.etiquetas),
        }


@dataclass(frozen=True)
class BinningSpec:
    atributos: dict[str, EspecIntervalos]

    def __getitem__(self, nombre: str) -> EspecIntervalos:
        return self.atributos[nombre]

    def __contains__(self, nombre: str) -> bool:
        return nombre in self.atributos

    @classmethod
    def desde_cortes(
        cls, cortes: dict[str, tuple[float, ...]], rangos: dict[str, tuple[float, float]]
    ) -> "BinningSpec":
        return cls({
            nombre: EspecIntervalos(tuple(float(c) for c in cs), float(rangos[nombre][0]), float(rangos[nombre][1]))
            for nombre, cs in cortes.items()
        })

    @classmethod
    def por_defecto(cls, ds: Dataset) -> "BinningSpec":
        """Cuartiles de igual frecuencia para la nota y bandas fijas de edad (17-25, 25-31, 31+)."""
        return cls({
            "grade": cortes_por_cuantiles(ds, "grade", CUANTILES_NOTA, RANGO_NOTA),
            "age": EspecIntervalos(CORTES_EDAD, *RANGO_EDAD_BINNING),
        })

    def a_dict(self) -> dict:
        return {nombre: espec.a_dict() for nombre, espec in sorted(self.atributos.items())}

    @classmethod
    def desde_dict(cls, datos: dict) -> "BinningSpec":
        return cls({
            nombre: EspecIntervalos(
                tuple(float(c) for c in d["cortes"]),
                float(d["minimo"]),
                float(d["maximo"]),
                tuple(d.get("etiquetas", ())),
            )
            for nombre, d in datos.items()
        })


def cortes_por_cuantiles(
    ds: Dataset, atributo: str, q: int, rango: tuple[float, float]
) -> EspecIntervalos:
    """Cortes de igual frecuencia (cuantiles interiores) redondeados a 2 decimales."""
    valores = pd.to_numeric(ds.filas[atributo], errors="coerce").dropna().to_numpy(dtype=float)
    minimo, maximo = rango
    cortes: list[float] = []
    if len(valores):
        for c in np.quantile(valores, [i / q for i in range(1, q)]):
            c = round(float(c), 2)
            if minimo < c < maximo and (not cortes or c > cortes[-1]):
                cortes.append(c)
    return EspecIntervalos(tuple(cortes), minimo, maximo)
