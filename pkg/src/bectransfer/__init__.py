"""Quantum state transfer between a BEC side mode and an optomechanical mirror."""
