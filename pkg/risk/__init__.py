"""
Risk computations for inverse binomial sampling estimators of a probability.

The computational modules (special_functions, loss_model, asymptotic_risk,
optimizer, finite_risk) depend only on numpy/scipy and can be used without a
configured Django project; the management commands expose them on the CLI.
"""
