"""Disintegrations of states along *-homomorphisms of finite-dimensional C*-algebras."""
