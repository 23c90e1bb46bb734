"""Dataset schema, loading, audit and encoding"""
