"""Quality-versus-quantity experiments for BIO-tagged NER corpora."""

__version__ = "0.1.0"
