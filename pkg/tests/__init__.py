"""Test suite for ttvision"""
