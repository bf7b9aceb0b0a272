# -*- coding: utf-8 -*-
"""
Servicio de Ingesta.

Lee el CSV de candidatos, valida cada fila contra el esquema de atributos,
convierte el año de nacimiento en edad, imputa faltantes según una política
y genera la vista discretizada (categórica) que consumen los modelos.

Los valores fuera de rango se rechazan con reporte en lugar de recortarse:
la calidad de la salida depende de la calidad de la entrada.
"""

import io
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, TextIO

import pandas as pd

from config.config import ANIO_REFERENCIA, EDAD_MINIMA, RANGO_NOTA
from src.datos.esquema import (
    COLUMNA_CLASE,
    COLUMNA_COHORTE,
    COLUMNA_ID,
    EMPLEOS,
    ESQUEMA_BASE,
    RELEVANCIAS,
    VALOR_DESCONOCIDO,
    Atributo,
    BinningSpec,
    Dataset,
    Procedencia,
    Rechazo,
)
from src.utils.exceptions import (
    AtributoIrrecuperableError,
    CsvMalformadoError,
    DiscretizacionError,
    IngestaError,
)
from src.utils.logger import configurar_logger

logger = configurar_logger(__name__)

COLUMNAS_REQUERIDAS = (
    COLUMNA_ID, "gender", "grade", "diploma", "employment",
    "job_relevancy", "field_group", "field", COLUMNA_COHORTE,
)

_ALIAS_GENERO = {"f": "Female", "female": "Female", "m": "Male", "male": "Male"}
_ALIAS_EMPLEO = {"unemployed": "Unemployed", "employed": "Employed"}


@dataclass(frozen=True)
class PoliticaImputacion:
    continua: Literal["mediana", "descartar"] = "mediana"
    categorica: Literal["moda", "unknown", "descartar"] = "moda"


class _FilaRechazada(Exception):
    pass


# --- Lectura y validación ---

def _leer_tabla(fuente: TextIO | str) -> pd.DataFrame:
    texto = fuente if isinstance(fuente, str) else fuente.read()
    if not texto.strip():
        raise CsvMalformadoError("CSV vacío: falta la fila de cabecera", 1)
    try:
        return pd.read_csv(
            io.StringIO(texto),
            dtype=str,
            keep_default_na=False,
            na_filter=False,
            skip_blank_lines=True,
        )
    except pd.errors.ParserError as e:
        coincidencia = re.search(r"line (\d+)", str(e))
        linea = int(coincidencia.group(1)) if coincidencia else None
        raise CsvMalformadoError(f"CSV malformado: {e}", linea) from e


def _texto(valor: str) -> str | None:
    valor = valor.strip()
    return valor or None


def _entero(valor: str, nombre: str) -> int:
    try:
        numero = float(valor)
    except ValueError as e:
        raise _FilaRechazada(f"{nombre} no numérico: '{valor}'") from e
    if not numero.is_integer():
        raise _FilaRechazada(f"{nombre} no entero: '{valor}'")
    return int(numero)


def _normalizar_enum(valor: str | None, alias: dict[str, str], nombre: str) -> str | None:
    if valor is None:
        return None
    if valor == VALOR_DESCONOCIDO:
        return valor
    normalizado = alias.get(valor.lower())
    if normalizado is None:
        raise _FilaRechazada(f"valor desconocido en {nombre}: '{valor}'")
    return normalizado


def _validar_fila(crudo: dict, anio_referencia: int, con_edad: bool) -> dict:
    fila: dict = {}

    fila[COLUMNA_ID] = _texto(crudo[COLUMNA_ID])
    if fila[COLUMNA_ID] is None:
        raise _FilaRechazada("id faltante")

    cohorte = _texto(crudo[COLUMNA_COHORTE])
    if cohorte is None:
        raise _FilaRechazada("cohort_year faltante")
    fila[COLUMNA_COHORTE] = _entero(cohorte, COLUMNA_COHORTE)

    fila["gender"] = _normalizar_enum(_texto(crudo["gender"]), _ALIAS_GENERO, "gender")

    nota = _texto(crudo["grade"])
    if nota is None:
        fila["grade"] = float("nan")
    else:
        try:
            fila["grade"] = float(nota)
        except ValueError as e:
            raise _FilaRechazada(f"grade no numérico: '{nota}'") from e
        if not (RANGO_NOTA[0] <= fila["grade"] <= RANGO_NOTA[1]):
            raise _FilaRechazada("grade out of range")

    if con_edad:
        edad = _texto(crudo["age"])
        fila["age"] = None if edad is None else _entero(edad, "age")
    else:
        nacimiento = _texto(crudo["birth_year"])
        fila["age"] = None if nacimiento is None else anio_referencia - _entero(nacimiento, "birth_year")
    if fila["age"] is not None and fila["age"] < EDAD_MINIMA:
        raise _FilaRechazada(f"age below {EDAD_MINIMA}")

    fila["diploma"] = _texto(crudo["diploma"])
    fila["employment"] = _normalizar_enum(_texto(crudo["employment"]), _ALIAS_EMPLEO, "employment")

    relevancia = _texto(crudo["job_relevancy"])
    if relevancia is not None and relevancia != VALOR_DESCONOCIDO:
        if relevancia not in RELEVANCIAS:
            raise _FilaRechazada(f"valor desconocido en job_relevancy: '{relevancia}'")
    fila["job_relevancy"] = relevancia

    empleo = fila["employment"]
    if empleo in EMPLEOS and relevancia in RELEVANCIAS:
        if (relevancia == "0") != (empleo == "Unemployed"):
            raise _FilaRechazada("employment/job_relevancy inconsistentes")

    fila["field_group"] = _texto(crudo["field_group"])
    fila["field"] = _texto(crudo["field"])
    if COLUMNA_CLASE in crudo:
        fila[COLUMNA_CLASE] = _texto(crudo[COLUMNA_CLASE])
    return fila


def _construir_frame(filas: list[dict], esquema: tuple[Atributo, ...]) -> pd.DataFrame:
    columnas = [COLUMNA_ID, *[a.nombre for a in esquema], COLUMNA_COHORTE]
    df = pd.DataFrame(filas, columns=columnas)
    df[COLUMNA_ID] = df[COLUMNA_ID].astype(object)
    df["grade"] = df["grade"].astype("float64")
    df["age"] = df["age"].astype("Int64")
    df[COLUMNA_COHORTE] = df[COLUMNA_COHORTE].astype("int64")
    for a in esquema:
        if a.tipo == "categorico":
            df[a.nombre] = df[a.nombre].astype(object).where(df[a.nombre].notna(), None)
    return df


def parse_and_validate(
    csv_source: TextIO | str, reference_year: int = ANIO_REFERENCIA, fuente: str = "<stream>"
) -> Dataset:
    """
    Lee un CSV de candidatos y devuelve un Dataset con las filas válidas.

    Las filas con valores fuera de rango o enumerados desconocidos se rechazan
    y se reportan (línea, id, motivo) en la procedencia. Las celdas vacías se
    conservan como faltantes para que 'preprocess' las trate.
    """
    tabla = _leer_tabla(csv_source)
    cabecera = set(tabla.columns)
    faltantes = [c for c in COLUMNAS_REQUERIDAS if c not in cabecera]
    if "age" not in cabecera and "birth_year" not in cabecera:
        faltantes.append("age|birth_year")
    if faltantes:
        raise CsvMalformadoError(f"Faltan columnas en la cabecera: {', '.join(faltantes)}", 1)

    con_edad = "age" in cabecera
    esquema = ESQUEMA_BASE + ((Atributo(COLUMNA_CLASE, "categorico"),) if COLUMNA_CLASE in cabecera else ())

    aceptadas: list[dict] = []
    rechazos: list[Rechazo] = []
    for i, crudo in enumerate(tabla.to_dict("records")):
        linea = i + 2  # la línea 1 es la cabecera
        try:
            aceptadas.append(_validar_fila(crudo, reference_year, con_edad))
        except _FilaRechazada as e:
            rechazo = Rechazo(linea, crudo.get(COLUMNA_ID, ""), str(e))
            logger.warning(f"Fila rechazada (línea {linea}, id '{rechazo.id}'): {rechazo.motivo}")
            rechazos.append(rechazo)

    nota = f"leídas {len(tabla)}, aceptadas {len(aceptadas)}, rechazadas {len(rechazos)}"
    if not con_edad:
        nota += f"; edad calculada desde birth_year con año de referencia {reference_year}"
    logger.info(f"Ingesta de '{fuente}': {nota}")
    return Dataset(
        esquema,
        _construir_frame(aceptadas, esquema),
        Procedencia(fuente, (nota,), tuple(rechazos)),
    )


def leer_dataset(ruta: Path | str, reference_year: int = ANIO_REFERENCIA) -> Dataset:
    """Atajo para leer un CSV desde disco (UTF-8)."""
    try:
        with open(ruta, "r", encoding="utf-8") as f:
            return parse_and_validate(f, reference_year, fuente=str(ruta))
    except OSError as e:
        raise IngestaError(f"No se pudo leer '{ruta}': {e}") from e


def serialize(ds: Dataset) -> str:
    """Escribe el Dataset en el formato CSV de ingesta (siempre con columna 'age')."""
    return ds.filas[ds.columnas()].to_csv(index=False, lineterminator="\n", na_rep="")


# --- Preproceso ---

def _moda(serie: pd.Series) -> str:
    # Empates resueltos por el valor lexicográficamente menor
    conteos = serie.dropna().value_counts()
    maximo = conteos.max()
    return sorted(str(v) for v, c in conteos.items() if c == maximo)[0]


def preprocess(raw: Dataset, policy: PoliticaImputacion = PoliticaImputacion()) -> Dataset:
    """
    Elimina los faltantes del Dataset según la política (mediana/descartar para
    continuos; moda/"unknown"/descartar para categóricos).

    Antes de imputar se deriva employment desde job_relevancy conocido (y 0 desde
    Unemployed) para conservar el invariante entre ambas columnas. El orden de
    las filas conservadas se mantiene.
    """
    df = raw.filas.copy()
    log: list[str] = []

    if not df[raw.nombres].isna().any().any():
        return raw.con_filas(df, "preproceso: sin faltantes")

    # 1. Derivaciones entre employment y job_relevancy
    if "employment" in df and "job_relevancy" in df:
        sin_empleo = df["employment"].isna() & df["job_relevancy"].isin(RELEVANCIAS)
        for idx in df.index[sin_empleo]:
            valor = "Unemployed" if df.at[idx, "job_relevancy"] == "0" else "Employed"
            df.at[idx, "employment"] = valor
            log.append(f"id {df.at[idx, COLUMNA_ID]}: employment := {valor} (derivado de job_relevancy)")
        sin_relevancia = df["job_relevancy"].isna() & (df["employment"] == "Unemployed")
        for idx in df.index[sin_relevancia]:
            df.at[idx, "job_relevancy"] = "0"
            log.append(f"id {df.at[idx, COLUMNA_ID]}: job_relevancy := 0 (derivado de employment)")

    # 2. Descartes
    descartar = pd.Series(False, index=df.index)
    if policy.continua == "descartar":
        descartar |= df[raw.continuos].isna().any(axis=1)
    if policy.categorica == "descartar":
        descartar |= df[raw.categoricos].isna().any(axis=1)
    if descartar.any():
        log.append(f"descartadas {int(descartar.sum())} filas con faltantes")
        df = df[~descartar]

    # 3. Continuos: mediana
    for nombre in raw.continuos:
        faltan = df[nombre].isna()
        if not faltan.any():
            continue
        presentes = df.loc[~faltan, nombre]
        if presentes.empty:
            raise AtributoIrrecuperableError(f"Todos los valores de '{nombre}' faltan: no se puede imputar la mediana.")
        mediana = float(presentes.astype(float).median())
        valor = int(round(mediana)) if nombre == "age" else mediana
        for idx in df.index[faltan]:
            df.at[idx, nombre] = valor
            log.append(f"id {df.at[idx, COLUMNA_ID]}: {nombre} := {valor:g} (mediana)")

    # 4. Categóricos: moda o "unknown"
    for nombre in raw.categoricos:
        faltan = df[nombre].isna()
        if not faltan.any():
            continue
        if nombre == "job_relevancy" and "employment" in df:
            _imputar_relevancia(df, faltan, policy, log)
            continue
        if policy.categorica == "unknown":
            valor = VALOR_DESCONOCIDO
        else:
            if df.loc[~faltan, nombre].empty:
                raise AtributoIrrecuperableError(f"Todos los valores de '{nombre}' faltan: no se puede imputar la moda.")
            valor = _moda(df.loc[~faltan, nombre])
        for idx in df.index[faltan]:
            df.at[idx, nombre] = valor
            log.append(f"id {df.at[idx, COLUMNA_ID]}: {nombre} := {valor}")

    for linea in log:
        logger.debug(f"Preproceso: {linea}")
    logger.info(f"Preproceso completado: {len(log)} acciones, {len(df)} filas conservadas.")
    return raw.con_filas(df, *log)


def _imputar_relevancia(df: pd.DataFrame, faltan: pd.Series, policy: PoliticaImputacion, log: list[str]):
    """Imputa job_relevancy de forma consistente con employment (ya imputado)."""
    conocidas = df.loc[~faltan, "job_relevancy"]
    empleados = df.loc[~faltan & (df["employment"] == "Employed"), "job_relevancy"]
    empleados = empleados[empleados.isin(("1", "2"))]
    for idx in df.index[faltan]:
        empleo = df.at[idx, "employment"]
        if empleo == "Unemployed":
            valor = "0"
        elif policy.categorica == "unknown":
            valor = VALOR_DESCONOCIDO
        elif empleo == "Employed":
            valor = _moda(empleados) if not empleados.empty else "1"
        elif not conocidas.empty:
            valor = _moda(conocidas)
        else:
            raise AtributoIrrecuperableError("Todos los valores de 'job_relevancy' faltan: no se puede imputar la moda.")
        df.at[idx, "job_relevancy"] = valor
        log.append(f"id {df.at[idx, COLUMNA_ID]}: job_relevancy := {valor}")


# --- Discretización ---

def discretize(ds: Dataset, spec: BinningSpec) -> Dataset:
    """
    Reemplaza cada valor continuo por la etiqueta de su intervalo.
    El resultado es un Dataset cuyo esquema es completamente categórico.
    """
    df = ds.filas.copy()
    for nombre in ds.continuos:
        if nombre not in spec:
            raise DiscretizacionError(f"La especificación de binning no cubre el atributo '{nombre}'.")
        intervalos = spec[nombre]
        etiquetas = []
        for valor in df[nombre]:
            etiqueta = None if pd.isna(valor) else intervalos.etiqueta(float(valor))
            if etiqueta is None:
                raise DiscretizacionError(f"El valor {valor} de '{nombre}' no cae en ningún intervalo.")
            etiquetas.append(etiqueta)
        df[nombre] = pd.Series(etiquetas, index=df.index, dtype=object)
    esquema = tuple(Atributo(a.nombre, "categorico") for a in ds.esquema)
    return Dataset(esquema, df.reset_index(drop=True), ds.procedencia.con_nota("discretizado"))
