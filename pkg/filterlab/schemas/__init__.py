"""Schemas package"""
