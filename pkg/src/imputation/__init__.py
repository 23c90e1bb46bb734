"""CART-based missing value imputation"""
