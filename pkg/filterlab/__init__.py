"""Lorentzian filtering toolkit for product states"""
