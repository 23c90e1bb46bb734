"""Confusion matrices, metrics, ROC/gain curves and reports"""
