"""Sugarcane leaf-disease toolkit: curation, lightweight CNN inference,
Grad-CAM explanations, TPE hyperparameter search, evaluation, and serving."""

__version__ = "0.1.0"
