# Repository Module

