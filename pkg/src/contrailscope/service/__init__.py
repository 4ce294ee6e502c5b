from .app import BundleIndex, create_app, evaluate_filter, serve

__all__ = ["BundleIndex", "create_app", "evaluate_filter", "serve"]
