# Expectation Types Package
