static void fill_table(int *tab, int n, int seed)
{
	int i;

	for (i = 0; i < n; i++)
		tab[i] = seed * i + 7;
}
