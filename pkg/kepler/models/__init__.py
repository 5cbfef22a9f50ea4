"""
Modelos de dados da biblioteca.
"""
