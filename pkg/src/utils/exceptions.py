# -*- coding: utf-8 -*-
"""
Excepciones Personalizadas de la Aplicación.

Define tipos de error específicos para cada etapa del flujo de minería,
permitiendo a la CLI saber exactamente qué etapa falló.
"""


class MineriaError(Exception):
    """Clase base para todos los errores del proyecto."""
    pass


# --- Ingesta ---

class IngestaError(MineriaError):
    """Errores de lectura, validación o preproceso del CSV."""
    pass


class CsvMalformadoError(IngestaError):
    """Lanzado si el CSV no se puede parsear. Incluye el número de línea si se conoce."""

    def __init__(self, mensaje: str, linea: int | None = None):
        self.linea = linea
        sufijo = f" (línea {linea})" if linea is not None else ""
        super().__init__(f"{mensaje}{sufijo}")


class AtributoIrrecuperableError(IngestaError):
    """Lanzado si todos los valores de un atributo faltan y la política exige imputarlos."""
    pass


class DiscretizacionError(IngestaError):
    """Lanzado si un valor no cae en ningún intervalo de la especificación de binning."""
    pass


# --- Generador sintético ---

class MezclaInvalidaError(MineriaError):
    """Lanzado si una especificación de componente de la mezcla no es válida."""
    pass


# --- Clustering ---

class ClusteringError(MineriaError):
    """Errores de K-means, aglomeración o selección de K."""
    pass


class VarianzaNulaError(ClusteringError):
    """Lanzado si un atributo continuo tiene varianza global cero."""
    pass


class ComparacionError(MineriaError):
    """Lanzado si dos clusterings no se pueden comparar."""
    pass


class PerfilError(MineriaError):
    """Errores al perfilar o etiquetar clusters."""
    pass


# --- Modelos y evaluación ---

class ModeloError(MineriaError):
    """Errores de entrenamiento, consistencia o carga de modelos predictivos."""
    pass


class EvaluacionError(MineriaError):
    """Errores de curvas de lift o leyendas de minería."""
    pass


class ConfiguracionError(MineriaError):
    """Lanzado si un archivo de configuración es inválido."""
    pass


class EtapaPipelineError(MineriaError):
    """Lanzado si una etapa del pipeline completo falla."""

    def __init__(self, etapa: str, causa: str):
        self.etapa = etapa
        self.causa = causa
        super().__init__(f"[{etapa}] {causa}")
