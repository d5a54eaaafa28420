# Fuzzy route assignment