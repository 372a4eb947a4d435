"""Consistent scoring, Murphy diagrams and comparative backtesting for
the triplet (VaR_alpha, VaR_beta, RVaR_{alpha,beta})."""
