"""Graph-Laplacian-regularized logistic regression for individual fairness."""
__version__ = "0.1.0"
