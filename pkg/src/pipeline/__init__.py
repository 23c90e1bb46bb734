"""Partitioning, artifacts and experiment orchestration"""
