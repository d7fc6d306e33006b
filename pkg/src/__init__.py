# Frame-measure lab: optimal (p,q)-frame bounds on finite abelian groups
