# Coregularization module
