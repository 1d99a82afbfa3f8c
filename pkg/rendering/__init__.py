# Rendering module
