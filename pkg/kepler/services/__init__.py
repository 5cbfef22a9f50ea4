"""
Serviços de geometria, decomposição, pontuação e cotas.
"""
