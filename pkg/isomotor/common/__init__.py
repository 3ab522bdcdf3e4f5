"""Common utility functions, exceptions, types and validators"""
