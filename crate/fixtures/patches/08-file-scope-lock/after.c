static int users;
static DEFINE_MUTEX(users_lock);

int open_dev(struct inode *inode, struct file *file)
{
	mutex_lock(&users_lock);
	users++;
	mutex_unlock(&users_lock);
	return 0;
}
