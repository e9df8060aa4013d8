static int read_name(struct file *f, char *out)
{
	char name[16];
	int n = kernel_read(f, name, 16, 0);

	if (n < 0)
		return n;
	strcpy(out, name);
	return 0;
}
