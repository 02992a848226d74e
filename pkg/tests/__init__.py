"""Tests package for the bandit simulator"""
