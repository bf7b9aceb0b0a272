# -*- coding: utf-8 -*-
"""
Configuración General de la Aplicación.

Todas las constantes pueden sobrescribirse desde un archivo .env en la raíz.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# --- Rutas ---
# Raíz del proyecto (un nivel arriba de /config)
BASE_DIR = Path(__file__).resolve().parent.parent

env_path = BASE_DIR / ".env"
load_dotenv(env_path, encoding="utf-8")


def _env_float(nombre: str, defecto: float) -> float:
    return float(os.getenv(nombre, defecto))


def _env_int(nombre: str, defecto: int) -> int:
    return int(os.getenv(nombre, defecto))


# --- Rutas de salida ---
LOG_DIR = Path(os.getenv("LOG_DIR", BASE_DIR / "data" / "logs"))
OUTPUT_DIR = Path(os.getenv("OUTPUT_DIR", BASE_DIR / "data" / "salidas"))

# --- Aleatoriedad ---
SEMILLA_DEFECTO = _env_int("SEMILLA", 2008)
# Identidad del generador fijada por versión para que las cohortes sean reproducibles
ALGORITMO_RNG = "PCG64"

# --- Ingesta ---
ANIO_REFERENCIA = _env_int("ANIO_REFERENCIA", 2008)
RANGO_NOTA = (0.0, 20.0)
EDAD_MINIMA = 17
RANGO_EDAD_BINNING = (17.0, 100.0)
CORTES_EDAD = (25.0, 31.0)
CUANTILES_NOTA = 4

# --- Clustering ---
ATRIBUTOS_CLUSTER = ("age", "gender", "grade", "employment", "job_relevancy")
MAX_K = _env_int("MAX_K", 15)
KMEANS_MAX_ITER = _env_int("KMEANS_MAX_ITER", 300)
KMEANS_TOL = _env_float("KMEANS_TOL", 1e-6)
UMBRAL_R1_BIC = _env_float("UMBRAL_R1_BIC", 0.04)
UMBRAL_R2_DISTANCIA = _env_float("UMBRAL_R2_DISTANCIA", 1.15)
FACTOR_GANANCIA_NULA = _env_float("FACTOR_GANANCIA_NULA", 1.15)
UMBRAL_MICRO_CLUSTERS = _env_int("UMBRAL_MICRO_CLUSTERS", 5000)
MAX_MICRO_CLUSTERS = _env_int("MAX_MICRO_CLUSTERS", 200)

# --- Comparación de clusterings ---
ADCO_BINS = _env_int("ADCO_BINS", 10)
ADCO_MAX_K_EXHAUSTIVO = 8

# --- Etiquetado ---
CLAVE_ORDEN_CLASES = os.getenv("CLAVE_ORDEN_CLASES", "age")
PREFIJO_CLASE = "Class"

# --- Modelos ---
MIN_SOPORTE = _env_float("MIN_SOPORTE", 0.01)
MIN_CONFIANZA = _env_float("MIN_CONFIANZA", 0.5)
MAX_LARGO_LHS = _env_int("MAX_LARGO_LHS", 4)
ARBOL_MAX_PROFUNDIDAD = _env_int("ARBOL_MAX_PROFUNDIDAD", 5)
ARBOL_MIN_HOJA = _env_int("ARBOL_MIN_HOJA", 2)
ARBOL_MIN_GANANCIA = _env_float("ARBOL_MIN_GANANCIA", 1e-6)

# --- Evaluación ---
# "media_todas" (defecto) o "media_correctas" para la probabilidad de la leyenda
AGREGACION_PROBABILIDAD = os.getenv("AGREGACION_PROBABILIDAD", "media_todas")
