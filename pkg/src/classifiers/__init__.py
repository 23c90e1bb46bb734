"""CHAID, multilayer perceptron and polynomial-kernel SVM classifiers"""
