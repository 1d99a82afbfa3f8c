# Metrics module
